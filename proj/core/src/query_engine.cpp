#include "knowhalu/query_engine.hpp"

#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

namespace {

const char* variant_name(KnowledgeVariant v) {
    switch (v) {
        case KnowledgeVariant::Unstructured: return "unstructured";
        case KnowledgeVariant::Structured: return "structured";
        case KnowledgeVariant::NoInformation: return "no_information";
    }
    return "unstructured";
}

KnowledgeVariant variant_from_name(const std::string& name) {
    if (name == "unstructured") return KnowledgeVariant::Unstructured;
    if (name == "structured") return KnowledgeVariant::Structured;
    if (name == "no_information") return KnowledgeVariant::NoInformation;
    throw Error("unknown knowledge variant: " + name);
}

std::string rstrip(const std::string& s) {
    size_t end = s.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(0, end);
}

}  // namespace

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::Concluded: return "concluded";
        case Termination::MaxSteps: return "max_steps";
        case Termination::Refusal: return "refusal";
        case Termination::NoQuery: return "no_query";
    }
    return "concluded";
}

std::string SubQuery::render_line() const {
    if (specific_text && general_text) return *specific_text + " [" + *general_text + "]";
    if (specific_text) return *specific_text;
    if (general_text) return *general_text;
    return {};
}

SubQuery parse_query_line(const std::string& line, Formulation mode) {
    SubQuery sq;
    size_t open = line.find('[');
    if (open == std::string::npos) {
        std::string text = trim(line);
        if (text.empty()) throw MalformedQueryError("empty query line");
        if (mode == Formulation::General)
            sq.general_text = text;
        else
            sq.specific_text = text;
        return sq;
    }
    size_t close = line.rfind(']');
    if (close == std::string::npos || close < open)
        throw MalformedQueryError("unbalanced bracket in query line: " + line);
    std::string specific = trim(line.substr(0, open));
    std::string general = trim(line.substr(open + 1, close - open - 1));
    if (!specific.empty()) sq.specific_text = specific;
    if (!general.empty()) sq.general_text = general;
    if (!sq.specific_text && !sq.general_text)
        throw MalformedQueryError("empty query line");
    return sq;
}

ChatRequest build_step_request(const ChatMessage& system, const std::string& user_body) {
    ChatRequest request;
    request.messages = {system, {Role::User, user_body}};
    request.max_tokens = 512;
    request.stop_markers = {"#Knowledge"};
    return request;
}

std::pair<ChatMessage, std::string> build_initial_transcript(const PromptLibrary& prompts,
                                                             const ReasoningConfig& config,
                                                             const std::string& question,
                                                             const std::string& answer) {
    const auto& tpl = prompts.select(config.task, Stage::Query, config.form, config.mode);
    std::map<std::string, std::string> bindings;
    if (config.task == Task::QA) {
        bindings["question"] = question;
        bindings["answer"] = answer;
    } else {
        bindings["summary"] = answer;
    }
    RenderedPrompt prompt = render(tpl, bindings);
    return {prompt.messages.at(0), rstrip(prompt.messages.at(1).text)};
}

void append_step(std::string& user_body, const std::string& emitted_text, size_t step_index,
                 const std::string& knowledge_raw_text) {
    user_body += "\n" + rstrip(emitted_text) + "\n#Knowledge-" + std::to_string(step_index) +
                 "#: " + knowledge_raw_text;
}

StepOutcome parse_step_completion(const std::string& completion_text, size_t step_index,
                                  Formulation mode, std::vector<std::string>* notes) {
    std::string text = rstrip(completion_text);
    std::string thought_marker = "#Thought-" + std::to_string(step_index) + "#:";
    std::string query_marker = "#Query-" + std::to_string(step_index) + "#:";
    size_t tpos = text.find(thought_marker);
    size_t qpos = text.find(query_marker);
    if (tpos == std::string::npos && qpos == std::string::npos)
        throw FormatError("no #Thought-" + std::to_string(step_index) + "#/#Query-" +
                          std::to_string(step_index) + "# marker in completion");

    StepOutcome outcome;
    outcome.emitted_text = text;
    if (tpos != std::string::npos) {
        size_t begin = tpos + thought_marker.size();
        size_t end = (qpos != std::string::npos && qpos > tpos) ? qpos : text.size();
        outcome.thought = trim(text.substr(begin, end - begin));
    }
    if (qpos == std::string::npos) {
        outcome.terminal = true;
        return outcome;
    }
    size_t line_begin = qpos + query_marker.size();
    size_t line_end = text.find('\n', line_begin);
    if (line_end == std::string::npos) line_end = text.size();
    std::string query_line = trim(text.substr(line_begin, line_end - line_begin));
    if (notes && text.find(query_marker, line_begin) != std::string::npos)
        notes->push_back("multiple #Query-" + std::to_string(step_index) +
                         "# lines; took the first");
    outcome.query = parse_query_line(query_line, mode);
    return outcome;
}

ReasoningTrace run_reasoning(const std::string& question, const std::string& answer,
                             const ReasoningConfig& config, Retriever& retriever,
                             ChatBackend& gateway, const PromptLibrary& prompts) {
    if (config.max_steps < 1) throw Error("run_reasoning: max_steps must be >= 1");

    ReasoningTrace trace;
    trace.question = question;
    trace.answer = answer;
    trace.form = config.form;
    trace.terminated = Termination::MaxSteps;

    auto [system, body] = build_initial_transcript(prompts, config, question, answer);

    for (size_t k = 1; k <= config.max_steps; ++k) {
        ChatCompletion completion;
        try {
            completion = gateway.chat(build_step_request(system, body));
        } catch (const RefusalError&) {
            trace.terminated = Termination::Refusal;
            return trace;
        }

        StepOutcome outcome;
        try {
            outcome = parse_step_completion(completion.text, k, config.mode, &trace.notes);
        } catch (const FormatError&) {
            trace.terminated = Termination::NoQuery;
            return trace;
        } catch (const MalformedQueryError& e) {
            trace.notes.push_back(e.what());
            trace.terminated = Termination::NoQuery;
            return trace;
        }

        ReasoningStep step;
        step.index = k;
        step.thought = outcome.thought;
        if (outcome.terminal) {
            trace.steps.push_back(std::move(step));
            trace.terminated = Termination::Concluded;
            return trace;
        }

        const SubQuery& sq = *outcome.query;
        std::vector<Passage> passages;
        if (config.mode == Formulation::Combined && sq.specific_text && sq.general_text) {
            auto specific_hits = retriever.retrieve(*sq.specific_text, config.k);
            auto general_hits = retriever.retrieve(*sq.general_text, config.k);
            passages = merge_formulation_results(specific_hits, general_hits);
        } else {
            passages = retriever.retrieve(sq.render_line(), config.k);
        }

        OptimizedKnowledge knowledge = optimize(sq.render_line(), passages, config.form, gateway,
                                                prompts, config.task, config.max_knowledge_chars);
        append_step(body, outcome.emitted_text, k, knowledge.raw_text);

        step.query = sq;
        step.knowledge = std::move(knowledge);
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

std::string ReasoningTrace::to_json() const {
    json root;
    root["question"] = question;
    root["answer"] = answer;
    root["form"] = form_name(form);
    json steps_json = json::array();
    for (const auto& step : steps) {
        json s;
        s["k"] = step.index;
        s["thought"] = step.thought;
        if (step.query) {
            json q;
            q["specific"] = step.query->specific_text ? json(*step.query->specific_text) : json();
            q["general"] = step.query->general_text ? json(*step.query->general_text) : json();
            s["query"] = q;
        } else {
            s["query"] = nullptr;
        }
        if (step.knowledge) {
            s["knowledge"] = {{"variant", variant_name(step.knowledge->variant)},
                              {"raw_text", step.knowledge->raw_text}};
        } else {
            s["knowledge"] = nullptr;
        }
        steps_json.push_back(std::move(s));
    }
    root["steps"] = std::move(steps_json);
    root["terminated"] = termination_name(terminated);
    if (!notes.empty()) root["notes"] = notes;
    return root.dump();
}

ReasoningTrace ReasoningTrace::from_json(const std::string& json_text) {
    json root = json::parse(json_text);
    ReasoningTrace trace;
    trace.question = root.at("question").get<std::string>();
    trace.answer = root.at("answer").get<std::string>();
    trace.form = form_from_name(root.at("form").get<std::string>());
    std::string term = root.at("terminated").get<std::string>();
    if (term == "concluded")
        trace.terminated = Termination::Concluded;
    else if (term == "max_steps")
        trace.terminated = Termination::MaxSteps;
    else if (term == "refusal")
        trace.terminated = Termination::Refusal;
    else if (term == "no_query")
        trace.terminated = Termination::NoQuery;
    else
        throw Error("unknown termination: " + term);
    for (const auto& s : root.at("steps")) {
        ReasoningStep step;
        step.index = s.at("k").get<size_t>();
        step.thought = s.at("thought").get<std::string>();
        if (!s.at("query").is_null()) {
            SubQuery q;
            if (!s.at("query").at("specific").is_null())
                q.specific_text = s.at("query").at("specific").get<std::string>();
            if (!s.at("query").at("general").is_null())
                q.general_text = s.at("query").at("general").get<std::string>();
            step.query = q;
        }
        if (!s.at("knowledge").is_null()) {
            OptimizedKnowledge k;
            k.variant = variant_from_name(s.at("knowledge").at("variant").get<std::string>());
            k.raw_text = s.at("knowledge").at("raw_text").get<std::string>();
            if (k.variant == KnowledgeVariant::Structured)
                k.triplets = parse_triplets(k.raw_text);
            else if (k.variant == KnowledgeVariant::Unstructured)
                k.text = k.raw_text;
            step.knowledge = std::move(k);
        }
        trace.steps.push_back(std::move(step));
    }
    if (root.contains("notes")) trace.notes = root.at("notes").get<std::vector<std::string>>();
    return trace;
}

}  // namespace knowhalu

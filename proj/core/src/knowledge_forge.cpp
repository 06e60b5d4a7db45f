#include "knowhalu/knowledge_forge.hpp"

#include "knowhalu/util.hpp"

namespace knowhalu {

OptimizedKnowledge OptimizedKnowledge::no_information() {
    OptimizedKnowledge k;
    k.variant = KnowledgeVariant::NoInformation;
    k.raw_text = kNoInformationSentinel;
    return k;
}

bool detect_no_information(const std::string& answer_line) {
    std::string normalized = trim(answer_line);
    while (!normalized.empty() &&
           (normalized.back() == '.' || normalized.back() == '!' || normalized.back() == '"')) {
        normalized.pop_back();
    }
    return to_lower(trim(normalized)) == "no specific information is available";
}

namespace {

Triplet fields_to_triplet(const std::vector<std::string>& fields) {
    // first two commas separate subject and predicate; the rest is the object
    Triplet t;
    t.subject = trim(fields[0]);
    t.predicate = trim(fields[1]);
    std::vector<std::string> rest(fields.begin() + 2, fields.end());
    t.object = trim(join(rest, ","));
    if (t.subject.empty() || t.predicate.empty() || t.object.empty())
        throw TripletParseError("triplet has an empty field");
    return t;
}

}  // namespace

std::vector<Triplet> parse_triplets(const std::string& answer_line) {
    std::vector<Triplet> out;
    const std::string& s = answer_line;
    size_t i = 0;
    auto skip_ws = [&] {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    };
    skip_ws();
    while (i < s.size()) {
        if (s[i] != '(') throw TripletParseError("expected '(' at position " + std::to_string(i));
        ++i;
        std::vector<std::string> fields;
        std::string cur;
        bool in_quotes = false;
        int depth = 0;
        bool closed = false;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (c == '"') {
                in_quotes = !in_quotes;
                cur.push_back(c);
            } else if (!in_quotes && c == '(') {
                ++depth;
                cur.push_back(c);
            } else if (!in_quotes && c == ')') {
                if (depth == 0) {
                    closed = true;
                    ++i;
                    break;
                }
                --depth;
                cur.push_back(c);
            } else if (!in_quotes && depth == 0 && c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!closed) throw TripletParseError("unterminated triplet group");
        fields.push_back(cur);
        if (fields.size() < 3)
            throw TripletParseError("triplet group has fewer than 3 fields: " +
                                    std::to_string(fields.size()));
        out.push_back(fields_to_triplet(fields));
        skip_ws();
        if (i < s.size() && s[i] == ',') {
            ++i;
            skip_ws();
        } else if (i < s.size() && (s[i] == '.')) {
            // trailing sentence period
            ++i;
            skip_ws();
        }
    }
    if (out.empty()) throw TripletParseError("no triplets found");
    return out;
}

ChatRequest build_optimize_request(const std::string& sub_query,
                                   const std::vector<Passage>& passages, KnowledgeForm form,
                                   const PromptLibrary& prompts, Task task,
                                   size_t max_knowledge_chars) {
    const auto& tpl = prompts.select(task, Stage::Optimize, form, Formulation::NA);
    std::string knowledge = format_passages(passages);
    if (knowledge.size() > max_knowledge_chars) knowledge.resize(max_knowledge_chars);
    RenderedPrompt prompt = render(tpl, {{"question", sub_query}, {"knowledge", knowledge}});
    ChatRequest request;
    request.messages = prompt.messages;
    request.max_tokens = 512;
    request.stop_markers = {"#Query", "\n\n"};
    return request;
}

OptimizedKnowledge optimize(const std::string& sub_query, const std::vector<Passage>& passages,
                            KnowledgeForm form, ChatBackend& gateway, const PromptLibrary& prompts,
                            Task task, size_t max_knowledge_chars) {
    if (passages.empty()) return OptimizedKnowledge::no_information();

    ChatCompletion completion;
    try {
        completion = gateway.chat(
            build_optimize_request(sub_query, passages, form, prompts, task, max_knowledge_chars));
    } catch (const RefusalError&) {
        OptimizedKnowledge k = OptimizedKnowledge::no_information();
        k.abstained = true;
        return k;
    }

    OptimizedKnowledge k;
    k.raw_text = trim(completion.text);
    if (detect_no_information(k.raw_text)) {
        k.variant = KnowledgeVariant::NoInformation;
        k.raw_text = kNoInformationSentinel;
        return k;
    }
    if (form == KnowledgeForm::Structured) {
        try {
            k.triplets = parse_triplets(k.raw_text);
            k.variant = KnowledgeVariant::Structured;
            return k;
        } catch (const TripletParseError&) {
            // degrade to unstructured; the judgment prompt tolerates prose
        }
    }
    k.variant = KnowledgeVariant::Unstructured;
    k.text = k.raw_text;
    return k;
}

}  // namespace knowhalu

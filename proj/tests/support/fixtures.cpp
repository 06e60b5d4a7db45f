#include "fixtures.hpp"

#include "knowhalu/fabrication_filter.hpp"
#include "knowhalu/knowledge_forge.hpp"
#include "knowhalu/query_engine.hpp"
#include "knowhalu/util.hpp"
#include "knowhalu/verdict.hpp"

namespace knowhalu::fixtures {

namespace {

ChatCompletion refusal_completion() {
    ChatCompletion c;
    c.finish_reason = FinishReason::Refusal;
    return c;
}

ReasoningConfig reasoning_config(const PipelineConfig& config, KnowledgeForm form) {
    ReasoningConfig rc;
    rc.task = config.task;
    rc.form = form;
    rc.mode = config.mode;
    rc.k = config.k;
    rc.max_steps = config.max_steps;
    rc.max_knowledge_chars = config.max_knowledge_chars;
    return rc;
}

}  // namespace

ReasoningTrace script_reasoning(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                                const ReasoningConfig& config, Retriever& retriever,
                                const std::string& question, const std::string& answer,
                                const std::vector<ScriptedStep>& steps,
                                const std::string& final_thought) {
    ReasoningTrace trace;
    trace.question = question;
    trace.answer = answer;
    trace.form = config.form;
    trace.terminated = Termination::Concluded;

    auto [system, body] = build_initial_transcript(prompts, config, question, answer);
    size_t k = 0;
    for (const auto& step : steps) {
        ++k;
        std::string tag = std::to_string(k);
        std::string emitted =
            "#Thought-" + tag + "#: " + step.thought + "\n#Query-" + tag + "#: " + step.query_line;
        transcript.add(build_step_request(system, body), make_completion(emitted));

        SubQuery sq = parse_query_line(step.query_line, config.mode);
        std::vector<Passage> passages;
        if (config.mode == Formulation::Combined && sq.specific_text && sq.general_text) {
            passages = merge_formulation_results(retriever.retrieve(*sq.specific_text, config.k),
                                                 retriever.retrieve(*sq.general_text, config.k));
        } else {
            passages = retriever.retrieve(sq.render_line(), config.k);
        }
        transcript.add(build_optimize_request(sq.render_line(), passages, config.form, prompts,
                                              config.task, config.max_knowledge_chars),
                       make_completion(step.knowledge_line));

        // mirror optimize(): trimmed answer line, sentinel normalized
        OptimizedKnowledge knowledge;
        knowledge.raw_text = trim(step.knowledge_line);
        if (detect_no_information(knowledge.raw_text)) {
            knowledge = OptimizedKnowledge::no_information();
        } else if (config.form == KnowledgeForm::Structured) {
            try {
                knowledge.triplets = parse_triplets(knowledge.raw_text);
                knowledge.variant = KnowledgeVariant::Structured;
            } catch (const TripletParseError&) {
                knowledge.variant = KnowledgeVariant::Unstructured;
                knowledge.text = knowledge.raw_text;
            }
        } else {
            knowledge.variant = KnowledgeVariant::Unstructured;
            knowledge.text = knowledge.raw_text;
        }
        append_step(body, emitted, k, knowledge.raw_text);

        ReasoningStep rs;
        rs.index = k;
        rs.thought = step.thought;
        rs.query = sq;
        rs.knowledge = std::move(knowledge);
        trace.steps.push_back(std::move(rs));
    }

    ++k;
    std::string emitted = "#Thought-" + std::to_string(k) + "#: " + final_thought;
    transcript.add(build_step_request(system, body), make_completion(emitted));
    ReasoningStep rs;
    rs.index = k;
    rs.thought = final_thought;
    trace.steps.push_back(std::move(rs));
    return trace;
}

void script_judgment(ScriptedTranscript& transcript, const PromptLibrary& prompts, Task task,
                     const std::string& question, const std::string& answer,
                     const ReasoningTrace& trace, const std::string& judgment_text,
                     const std::string& label, double confidence) {
    transcript.add(build_judgment_request(question, answer, trace, prompts, task),
                   make_judgment_completion(judgment_text, label, confidence));
}

void script_extraction(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                       const std::string& question, const std::string& answer,
                       const std::string& extraction_text) {
    transcript.add(build_extraction_request(question, answer, prompts),
                   make_completion(extraction_text));
}

void script_refusal(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                    const ReasoningConfig& config, const std::string& question,
                    const std::string& answer) {
    auto [system, body] = build_initial_transcript(prompts, config, question, answer);
    transcript.add(build_step_request(system, body), refusal_completion());

    ReasoningTrace trace;
    trace.question = question;
    trace.answer = answer;
    trace.form = config.form;
    trace.terminated = Termination::Refusal;
    transcript.add(build_judgment_request(question, answer, trace, prompts, config.task),
                   refusal_completion());
}

void script_qa_item(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                    const PipelineConfig& config, const DatasetItem& item,
                    const std::string& extraction_text, const std::vector<FormScript>& forms) {
    script_extraction(transcript, prompts, item.question, item.candidate, extraction_text);
    if (parse_extraction(trim(extraction_text)).is_none) return;

    OffTheShelfRetriever retriever(item.off_the_shelf_knowledge.value_or(""));
    for (const auto& form : forms) {
        ReasoningConfig rc = reasoning_config(config, form.form);
        ReasoningTrace trace = script_reasoning(transcript, prompts, rc, retriever, item.question,
                                                item.candidate, form.steps, form.final_thought);
        script_judgment(transcript, prompts, config.task, item.question, item.candidate, trace,
                        form.judgment_text, form.label, form.confidence);
    }
}

void script_summary_item(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                         const PipelineConfig& config, const DatasetItem& item,
                         EmbedBackend& embedder, const std::vector<SegmentScript>& segments) {
    auto chunks = chunk_document(item.id, item.question, config.chunk_max_words);
    DenseIndex index = build_index(chunks, embedder);
    LocalIndexRetriever retriever(index, embedder);

    auto texts = segment_summary(item.candidate, config.segment_max_words);
    if (texts.size() != segments.size())
        throw Error("segment script count mismatch: summary has " + std::to_string(texts.size()) +
                    " segments, " + std::to_string(segments.size()) + " scripted");
    for (size_t i = 0; i < texts.size(); ++i) {
        const auto& seg = segments[i];
        if (seg.refuse) {
            for (KnowledgeForm form : config.forms)
                script_refusal(transcript, prompts, reasoning_config(config, form), item.question,
                               texts[i]);
            continue;
        }
        for (const auto& form : seg.forms) {
            ReasoningConfig rc = reasoning_config(config, form.form);
            ReasoningTrace trace = script_reasoning(transcript, prompts, rc, retriever,
                                                    item.question, texts[i], form.steps,
                                                    form.final_thought);
            script_judgment(transcript, prompts, config.task, item.question, texts[i], trace,
                            form.judgment_text, form.label, form.confidence);
        }
    }
}

}  // namespace knowhalu::fixtures

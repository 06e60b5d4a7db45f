#pragma once

#include <string>
#include <vector>

#include "knowhalu/pipeline.hpp"
#include "knowhalu/scripted_backend.hpp"

namespace knowhalu::fixtures {

// One scripted reasoning step: the model's emitted thought/query pair and the
// optimizer's answer line for that step.
struct ScriptedStep {
    std::string thought;
    std::string query_line;      // as emitted, brackets included in combined mode
    std::string knowledge_line;  // optimizer completion text
};

// Scripts the step requests and optimize requests for one (question, answer,
// form) reasoning run and returns the trace run_reasoning will produce.
ReasoningTrace script_reasoning(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                                const ReasoningConfig& config, Retriever& retriever,
                                const std::string& question, const std::string& answer,
                                const std::vector<ScriptedStep>& steps,
                                const std::string& final_thought);

// Scripts the judgment request for a finished trace.
void script_judgment(ScriptedTranscript& transcript, const PromptLibrary& prompts, Task task,
                     const std::string& question, const std::string& answer,
                     const ReasoningTrace& trace, const std::string& judgment_text,
                     const std::string& label, double confidence);

// Scripts the Phase-1 extraction request.
void script_extraction(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                       const std::string& question, const std::string& answer,
                       const std::string& extraction_text);

// Scripts a refusal for the first reasoning step and for the judgment over
// the resulting empty trace.
void script_refusal(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                    const ReasoningConfig& config, const std::string& question,
                    const std::string& answer);

struct FormScript {
    KnowledgeForm form = KnowledgeForm::Unstructured;
    std::vector<ScriptedStep> steps;
    std::string final_thought;
    std::string judgment_text;  // must contain the label
    std::string label;
    double confidence = 0.9;
};

// Scripts a complete QA item (extraction + both forms + judgments) against an
// off-the-shelf knowledge passage. A NONE extraction scripts Phase 1 only.
void script_qa_item(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                    const PipelineConfig& config, const DatasetItem& item,
                    const std::string& extraction_text, const std::vector<FormScript>& forms);

struct SegmentScript {
    std::vector<FormScript> forms;
    bool refuse = false;  // refusal on the first step of every form
};

// Scripts a complete summarization item; segment scripts must line up with
// segment_summary(item.candidate, config.segment_max_words).
void script_summary_item(ScriptedTranscript& transcript, const PromptLibrary& prompts,
                         const PipelineConfig& config, const DatasetItem& item,
                         EmbedBackend& embedder, const std::vector<SegmentScript>& segments);

}  // namespace knowhalu::fixtures

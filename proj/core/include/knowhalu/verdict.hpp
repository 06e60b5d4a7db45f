#pragma once

#include <string>
#include <vector>

#include "knowhalu/gateway.hpp"
#include "knowhalu/prompt_library.hpp"
#include "knowhalu/query_engine.hpp"

namespace knowhalu {

enum class JudgmentLabel { Correct, Incorrect, Inconclusive };

const char* judgment_label_name(JudgmentLabel label);
JudgmentLabel judgment_label_from_name(const std::string& name);

struct Judgment {
    JudgmentLabel label = JudgmentLabel::Inconclusive;
    double confidence = 1.0;  // in (0,1]; 0 sentinel only when abstained
    std::string rationale;
    KnowledgeForm form = KnowledgeForm::Unstructured;
    bool abstained = false;
};

// Last occurrence among the three uppercase labels with word boundaries,
// longest-first so INCORRECT is never read as CORRECT.
JudgmentLabel parse_label(const std::string& text);

// The #Query-k#/#Knowledge-k# block of a trace with #Thought# lines removed.
std::string trace_query_knowledge(const ReasoningTrace& trace);

ChatRequest build_judgment_request(const std::string& question, const std::string& answer,
                                   const ReasoningTrace& trace, const PromptLibrary& prompts,
                                   Task task);

// One chat call per (trace, form); confidence taken at the label occurrence
// parse_label selects.
Judgment judge(const std::string& question, const std::string& answer, const ReasoningTrace& trace,
               ChatBackend& gateway, const PromptLibrary& prompts, Task task = Task::QA);

// Sentence-boundary-aware greedy packing into segments of at most max_words;
// an oversized sentence is split at the word bound.
std::vector<std::string> segment_summary(const std::string& summary, size_t max_words = 30);

enum class SummaryVerdict { Hallucinated, Faithful };

// Hallucinated iff any label is INCORRECT; INCONCLUSIVE is coerced to
// INCORRECT for summaries.
SummaryVerdict compose_summary_verdict(const std::vector<JudgmentLabel>& segment_judgments);

}  // namespace knowhalu

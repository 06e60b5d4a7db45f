#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "knowhalu/gateway.hpp"
#include "knowhalu/knowledge_forge.hpp"
#include "knowhalu/prompt_library.hpp"
#include "knowhalu/retrieval.hpp"

namespace knowhalu {

struct SubQuery {
    std::optional<std::string> specific_text;
    std::optional<std::string> general_text;

    // "specific [general]" in combined mode, single text otherwise.
    std::string render_line() const;
};

// Splits "specific query [general query]"; absence of brackets assigns the
// whole line per the active formulation mode.
SubQuery parse_query_line(const std::string& line, Formulation mode);

struct ReasoningStep {
    size_t index = 0;  // 1-based
    std::string thought;
    std::optional<SubQuery> query;
    std::optional<OptimizedKnowledge> knowledge;
};

enum class Termination { Concluded, MaxSteps, Refusal, NoQuery };

const char* termination_name(Termination t);

struct ReasoningTrace {
    std::string question;
    std::string answer;
    KnowledgeForm form = KnowledgeForm::Unstructured;
    std::vector<ReasoningStep> steps;
    Termination terminated = Termination::Concluded;
    std::vector<std::string> notes;

    std::string to_json() const;
    static ReasoningTrace from_json(const std::string& json_text);
};

struct StepOutcome {
    bool terminal = false;
    std::string thought;
    std::optional<SubQuery> query;
    std::string emitted_text;  // completion text appended to the transcript
};

struct ReasoningConfig {
    Task task = Task::QA;
    KnowledgeForm form = KnowledgeForm::Unstructured;
    Formulation mode = Formulation::Combined;
    size_t k = 2;             // Top-K passages per formulation
    size_t max_steps = 8;
    size_t max_knowledge_chars = 8000;
};

ChatRequest build_step_request(const ChatMessage& system, const std::string& user_body);

// Initial user body: rendered query-stage template for (task, form, mode).
// For QA bind {question}/{answer}; for summarization bind {summary}.
std::pair<ChatMessage, std::string> build_initial_transcript(const PromptLibrary& prompts,
                                                             const ReasoningConfig& config,
                                                             const std::string& question,
                                                             const std::string& answer);

// Appends the model's emitted step text plus the injected knowledge line,
// preserving the #Thought/#Query/#Knowledge interleaving.
void append_step(std::string& user_body, const std::string& emitted_text, size_t step_index,
                 const std::string& knowledge_raw_text);

// Parses one completion into Continue/Terminate. Throws FormatError when no
// #Thought-k#/#Query-k# marker is found.
StepOutcome parse_step_completion(const std::string& completion_text, size_t step_index,
                                  Formulation mode, std::vector<std::string>* notes);

// The full step-wise reasoning loop for one item and one knowledge form.
ReasoningTrace run_reasoning(const std::string& question, const std::string& answer,
                             const ReasoningConfig& config, Retriever& retriever,
                             ChatBackend& gateway, const PromptLibrary& prompts);

}  // namespace knowhalu

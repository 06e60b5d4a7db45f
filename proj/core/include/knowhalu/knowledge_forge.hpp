#pragma once

#include <string>
#include <vector>

#include "knowhalu/gateway.hpp"
#include "knowhalu/prompt_library.hpp"
#include "knowhalu/retrieval.hpp"

namespace knowhalu {

inline constexpr const char* kNoInformationSentinel = "No specific information is available.";

struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;
};

enum class KnowledgeVariant { Unstructured, Structured, NoInformation };

struct OptimizedKnowledge {
    KnowledgeVariant variant = KnowledgeVariant::NoInformation;
    std::string text;                // Unstructured content
    std::vector<Triplet> triplets;   // Structured content
    std::string raw_text;            // the model's literal answer line
    bool abstained = false;          // refusal recorded at this stage

    static OptimizedKnowledge no_information();
};

// Splits on top-level "), (" boundaries; commas inside double quotes are not
// separators; commas beyond the second separator are absorbed into the object.
std::vector<Triplet> parse_triplets(const std::string& answer_line);

// True iff the trimmed line (trailing punctuation normalized) equals the
// no-information sentinel, case-insensitively.
bool detect_no_information(const std::string& answer_line);

ChatRequest build_optimize_request(const std::string& sub_query,
                                   const std::vector<Passage>& passages, KnowledgeForm form,
                                   const PromptLibrary& prompts, Task task,
                                   size_t max_knowledge_chars = 8000);

// Condenses retrieved passages into the requested knowledge form, or emits
// the no-information sentinel without a model call when passages are empty.
OptimizedKnowledge optimize(const std::string& sub_query, const std::vector<Passage>& passages,
                            KnowledgeForm form, ChatBackend& gateway, const PromptLibrary& prompts,
                            Task task = Task::QA, size_t max_knowledge_chars = 8000);

}  // namespace knowhalu

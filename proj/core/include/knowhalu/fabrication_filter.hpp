#pragma once

#include <optional>
#include <string>

#include "knowhalu/gateway.hpp"
#include "knowhalu/prompt_library.hpp"

namespace knowhalu {

struct ExtractionResult {
    std::string raw_text;
    std::optional<std::string> extracted_entity;
    bool is_none = false;
};

// is_none iff raw_text contains a standalone uppercase "NONE" bounded by
// non-letters. Case-sensitive; "Nonesuch" and lowercase "none" never match.
ExtractionResult parse_extraction(const std::string& raw_text);

ChatRequest build_extraction_request(const std::string& question, const std::string& answer,
                                     const PromptLibrary& prompts);

// Phase-1 non-fabrication check: one chat call per (question, answer).
ExtractionResult check_specificity(const std::string& question, const std::string& answer,
                                   ChatBackend& gateway, const PromptLibrary& prompts);

}  // namespace knowhalu

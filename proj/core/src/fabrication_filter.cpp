#include "knowhalu/fabrication_filter.hpp"

#include <cctype>

#include "knowhalu/util.hpp"

namespace knowhalu {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool contains_standalone_none(const std::string& text) {
    size_t pos = 0;
    while ((pos = text.find("NONE", pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_letter(text[pos - 1]);
        bool right_ok = pos + 4 >= text.size() || !is_letter(text[pos + 4]);
        if (left_ok && right_ok) return true;
        pos += 4;
    }
    return false;
}

}  // namespace

ExtractionResult parse_extraction(const std::string& raw_text) {
    ExtractionResult result;
    result.raw_text = raw_text;
    result.is_none = contains_standalone_none(raw_text);
    if (!result.is_none) result.extracted_entity = raw_text;
    return result;
}

ChatRequest build_extraction_request(const std::string& question, const std::string& answer,
                                     const PromptLibrary& prompts) {
    const auto& tpl = prompts.select(Task::QA, Stage::Extraction, KnowledgeForm::NA, Formulation::NA);
    RenderedPrompt prompt = render(tpl, {{"question", question}, {"answer", answer}});
    ChatRequest request;
    request.messages = prompt.messages;
    request.max_tokens = 512;
    request.stop_markers = {"#Question"};
    return request;
}

ExtractionResult check_specificity(const std::string& question, const std::string& answer,
                                   ChatBackend& gateway, const PromptLibrary& prompts) {
    if (question.empty() || answer.empty())
        throw Error("check_specificity: question and answer must be non-empty");
    ChatCompletion completion = gateway.chat(build_extraction_request(question, answer, prompts));
    return parse_extraction(trim(completion.text));
}

}  // namespace knowhalu

#pragma once

#include <map>
#include <string>
#include <vector>

#include "knowhalu/gateway.hpp"

namespace knowhalu {

enum class Task { QA, Summary };
enum class Stage { Extraction, Query, Optimize, Judge };
enum class KnowledgeForm { Structured, Unstructured, NA };
enum class Formulation { Specific, General, Combined, NA };

const char* task_name(Task t);
const char* stage_name(Stage s);
const char* form_name(KnowledgeForm f);
const char* formulation_name(Formulation f);

Task task_from_name(const std::string& name);
KnowledgeForm form_from_name(const std::string& name);
Formulation formulation_from_name(const std::string& name);

struct PromptTemplate {
    std::string id;           // e.g. "qa.query.structured.combined"
    std::string system_text;  // first block of the asset file
    std::string body;         // remainder, demonstrations plus the final slot
    std::vector<std::string> demonstrations;
    std::vector<std::string> placeholders;  // names referenced by body
};

struct RenderedPrompt {
    std::vector<ChatMessage> messages;
};

// Byte-exact placeholder substitution; demonstration text is untouched.
RenderedPrompt render(const PromptTemplate& tpl, const std::map<std::string, std::string>& bindings);

// Loads the prompt asset tree `prompts/<task>/<stage>/<form>/<formulation>.txt`
// and verifies every file against the manifest checksums. Read-only after load.
class PromptLibrary {
public:
    static PromptLibrary load(const std::string& asset_dir);

    const PromptTemplate& select(Task task, Stage stage, KnowledgeForm form,
                                 Formulation formulation) const;
    const PromptTemplate& by_id(const std::string& id) const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

}  // namespace knowhalu

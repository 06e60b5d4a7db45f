#include "knowhalu/prompt_library.hpp"

#include <array>
#include <filesystem>

#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 6> kKnownPlaceholders = {
    "question", "answer", "knowledge", "query_knowledge", "summary", "document"};

std::vector<std::string> scan_placeholders(const std::string& body) {
    std::vector<std::string> found;
    for (const char* name : kKnownPlaceholders) {
        std::string token = std::string("{") + name + "}";
        if (body.find(token) != std::string::npos) found.emplace_back(name);
    }
    return found;
}

std::vector<std::string> split_blocks(const std::string& text) {
    std::vector<std::string> blocks;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t next = text.find("\n\n", pos);
        if (next == std::string::npos) {
            blocks.push_back(text.substr(pos));
            break;
        }
        blocks.push_back(text.substr(pos, next - pos));
        pos = next + 2;
        while (pos < text.size() && text[pos] == '\n') ++pos;
    }
    return blocks;
}

}  // namespace

const char* task_name(Task t) { return t == Task::QA ? "qa" : "summary"; }

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Extraction: return "extraction";
        case Stage::Query: return "query";
        case Stage::Optimize: return "optimize";
        case Stage::Judge: return "judge";
    }
    return "query";
}

const char* form_name(KnowledgeForm f) {
    switch (f) {
        case KnowledgeForm::Structured: return "structured";
        case KnowledgeForm::Unstructured: return "unstructured";
        case KnowledgeForm::NA: return "na";
    }
    return "na";
}

const char* formulation_name(Formulation f) {
    switch (f) {
        case Formulation::Specific: return "specific";
        case Formulation::General: return "general";
        case Formulation::Combined: return "combined";
        case Formulation::NA: return "na";
    }
    return "na";
}

Task task_from_name(const std::string& name) {
    if (name == "qa") return Task::QA;
    if (name == "summary") return Task::Summary;
    throw ConfigError("unknown task: " + name);
}

KnowledgeForm form_from_name(const std::string& name) {
    if (name == "structured") return KnowledgeForm::Structured;
    if (name == "unstructured") return KnowledgeForm::Unstructured;
    if (name == "na") return KnowledgeForm::NA;
    throw ConfigError("unknown knowledge form: " + name);
}

Formulation formulation_from_name(const std::string& name) {
    if (name == "specific") return Formulation::Specific;
    if (name == "general") return Formulation::General;
    if (name == "combined") return Formulation::Combined;
    if (name == "na") return Formulation::NA;
    throw ConfigError("unknown formulation: " + name);
}

RenderedPrompt render(const PromptTemplate& tpl, const std::map<std::string, std::string>& bindings) {
    std::string body = tpl.body;
    std::vector<std::string> missing;
    for (const auto& name : tpl.placeholders) {
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            missing.push_back(name);
            continue;
        }
        std::string token = "{" + name + "}";
        size_t pos = 0;
        while ((pos = body.find(token, pos)) != std::string::npos) {
            body.replace(pos, token.size(), it->second);
            pos += it->second.size();
        }
    }
    if (!missing.empty())
        throw MissingBindingError("unresolved placeholders: " + join(missing, ", "));
    RenderedPrompt out;
    out.messages.push_back({Role::System, tpl.system_text});
    out.messages.push_back({Role::User, body});
    return out;
}

PromptLibrary PromptLibrary::load(const std::string& asset_dir) {
    namespace fs = std::filesystem;
    fs::path manifest_path = fs::path(asset_dir) / "manifest.json";
    json manifest = json::parse(read_file(manifest_path.string()));

    PromptLibrary lib;
    for (const auto& entry : manifest.at("templates")) {
        std::string id = entry.at("id").get<std::string>();
        std::string rel = entry.at("path").get<std::string>();
        std::string checksum = entry.at("checksum").get<std::string>();
        std::string content = read_file((fs::path(asset_dir) / rel).string());
        std::string actual = to_hex(fnv1a64(content));
        if (actual != checksum)
            throw Error("prompt asset checksum mismatch for " + id + ": expected " + checksum +
                        ", got " + actual);

        PromptTemplate tpl;
        tpl.id = id;
        size_t split = content.find("\n\n");
        if (split == std::string::npos)
            throw Error("prompt asset has no system/body separator: " + id);
        tpl.system_text = content.substr(0, split);
        size_t body_start = split + 2;
        while (body_start < content.size() && content[body_start] == '\n') ++body_start;
        tpl.body = content.substr(body_start);
        tpl.placeholders = scan_placeholders(tpl.body);
        for (const auto& block : split_blocks(tpl.body))
            if (!block.empty() && block[0] == '#' && block.find('{') == std::string::npos)
                tpl.demonstrations.push_back(block);
        lib.templates_[id] = std::move(tpl);
    }
    return lib;
}

const PromptTemplate& PromptLibrary::by_id(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw UnknownTemplateError("no template with id: " + id);
    return it->second;
}

const PromptTemplate& PromptLibrary::select(Task task, Stage stage, KnowledgeForm form,
                                            Formulation formulation) const {
    if (task == Task::Summary && stage == Stage::Extraction)
        throw UnknownTemplateError("summarization skips the extraction phase");
    std::string id = std::string(task_name(task)) + "." + stage_name(stage) + "." +
                     form_name(form) + "." + formulation_name(formulation);
    return by_id(id);
}

}  // namespace knowhalu

#include "knowhalu/scripted_backend.hpp"

#include <cmath>

#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

void ScriptedTranscript::add(const ChatRequest& request, ChatCompletion completion) {
    std::string fp = prompt_fingerprint(request);
    entries[fp] = std::move(completion);
}

std::string ScriptedTranscript::to_json() const {
    json root;
    root["strict"] = strict;
    json e = json::object();
    for (const auto& [fp, completion] : entries) {
        json tokens = json::array();
        for (const auto& t : completion.tokens)
            tokens.push_back({{"token", t.token_text}, {"logprob", t.logprob}});
        e[fp] = {{"text", completion.text},
                 {"tokens", tokens},
                 {"finish_reason", finish_reason_name(completion.finish_reason)}};
    }
    root["entries"] = e;
    return root.dump(2);
}

ScriptedTranscript ScriptedTranscript::from_json(const std::string& json_text) {
    json root = json::parse(json_text);
    ScriptedTranscript t;
    t.strict = root.value("strict", true);
    for (const auto& [fp, entry] : root.at("entries").items()) {
        ChatCompletion c;
        c.text = entry.at("text").get<std::string>();
        for (const auto& tok : entry.value("tokens", json::array()))
            c.tokens.push_back({tok.at("token").get<std::string>(), tok.at("logprob").get<double>()});
        c.finish_reason = finish_reason_from_name(entry.value("finish_reason", "stop"));
        t.entries[fp] = std::move(c);
    }
    return t;
}

ScriptedTranscript ScriptedTranscript::load_file(const std::string& path) {
    return from_json(read_file(path));
}

void ScriptedTranscript::save_file(const std::string& path) const {
    atomic_write_file(path, to_json());
}

ChatCompletion ScriptedChatBackend::chat_raw(const ChatRequest& request) {
    std::string fp = prompt_fingerprint(request);
    auto it = transcript_.entries.find(fp);
    if (it == transcript_.entries.end()) {
        if (transcript_.strict)
            throw MissingTranscriptError("no scripted entry for fingerprint " + fp);
        return ChatCompletion{};
    }
    return it->second;
}

ScriptedEmbedder ScriptedEmbedder::load_file(const std::string& path) {
    json root = json::parse(read_file(path));
    std::map<std::string, std::vector<double>> entries;
    for (const auto& [text, vec] : root.at("entries").items())
        entries[text] = vec.get<std::vector<double>>();
    return ScriptedEmbedder(std::move(entries), root.value("strict", true));
}

std::vector<std::vector<double>> ScriptedEmbedder::embed_raw(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        auto it = entries_.find(text);
        if (it == entries_.end()) {
            if (strict_) throw MissingTranscriptError("no scripted embedding for: " + text);
            out.emplace_back(entries_.empty() ? std::vector<double>{1.0}
                                              : std::vector<double>(entries_.begin()->second.size(), 0.0));
            out.back()[0] = 1.0;
            continue;
        }
        out.push_back(it->second);
    }
    return out;
}

std::vector<std::vector<double>> HashingEmbedder::embed_raw(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<double> v(dim_, 0.0);
        for (const auto& word : split_words(to_lower(text))) {
            std::uint64_t h = fnv1a64(word);
            double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
            v[h % dim_] += sign;
        }
        bool all_zero = true;
        for (double x : v)
            if (x != 0.0) { all_zero = false; break; }
        if (all_zero) v[0] = 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

ChatCompletion make_completion(const std::string& text) {
    ChatCompletion c;
    c.text = text;
    if (!text.empty()) c.tokens.push_back({text, 0.0});
    return c;
}

ChatCompletion make_judgment_completion(const std::string& text, const std::string& label,
                                        double confidence) {
    ChatCompletion c;
    c.text = text;
    size_t pos = text.rfind(label);
    if (pos == std::string::npos || confidence <= 0.0 || confidence > 1.0)
        throw Error("make_judgment_completion: bad label or confidence");
    double lp = std::log(confidence);
    // prefix | first 3 chars of label | remainder
    size_t head = std::min<size_t>(3, label.size());
    if (pos > 0) c.tokens.push_back({text.substr(0, pos), -1e-4});
    c.tokens.push_back({text.substr(pos, head), lp});
    if (pos + head < text.size()) c.tokens.push_back({text.substr(pos + head), -1e-4});
    return c;
}

}  // namespace knowhalu

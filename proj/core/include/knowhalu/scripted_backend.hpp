#pragma once

#include <map>
#include <string>
#include <vector>

#include "knowhalu/gateway.hpp"

namespace knowhalu {

// Deterministic replay backend: fingerprint -> canned completion.
struct ScriptedTranscript {
    std::map<std::string, ChatCompletion> entries;
    bool strict = true;

    void add(const ChatRequest& request, ChatCompletion completion);

    static ScriptedTranscript load_file(const std::string& path);
    void save_file(const std::string& path) const;
    std::string to_json() const;
    static ScriptedTranscript from_json(const std::string& json_text);
};

class ScriptedChatBackend : public ChatBackend {
public:
    explicit ScriptedChatBackend(ScriptedTranscript transcript)
        : transcript_(std::move(transcript)) {}

protected:
    ChatCompletion chat_raw(const ChatRequest& request) override;

private:
    ScriptedTranscript transcript_;  // immutable after load
};

// Scripted embedder: exact text -> vector.
class ScriptedEmbedder : public EmbedBackend {
public:
    explicit ScriptedEmbedder(std::map<std::string, std::vector<double>> entries, bool strict = true)
        : entries_(std::move(entries)), strict_(strict) {}

    static ScriptedEmbedder load_file(const std::string& path);

protected:
    std::vector<std::vector<double>> embed_raw(const std::vector<std::string>& texts) override;

private:
    std::map<std::string, std::vector<double>> entries_;
    bool strict_;
};

// Feature-hashed bag-of-words embedder. Fully deterministic and offline;
// overlapping vocabulary yields positive cosine similarity.
class HashingEmbedder : public EmbedBackend {
public:
    explicit HashingEmbedder(size_t dim = 256) : dim_(dim) {}

protected:
    std::vector<std::vector<double>> embed_raw(const std::vector<std::string>& texts) override;

private:
    size_t dim_;
};

// Builds a completion tokenized so that the first token of `label` (at its
// last occurrence in `text`) carries log(confidence). Used when authoring
// scripted judgment transcripts.
ChatCompletion make_judgment_completion(const std::string& text, const std::string& label,
                                        double confidence);

// Single-token completion with logprob 0 (confidence 1).
ChatCompletion make_completion(const std::string& text);

}  // namespace knowhalu

#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "knowhalu/gateway.hpp"

namespace knowhalu {

// On-disk response cache keyed by prompt fingerprint. Writes are serialized;
// each entry is written atomically so readers never observe torn files.
class ResponseCache {
public:
    explicit ResponseCache(std::string dir) : dir_(std::move(dir)) {}

    bool lookup(const std::string& fingerprint, ChatCompletion& out) const;
    void store(const std::string& fingerprint, const ChatCompletion& completion);

private:
    std::string dir_;
    mutable std::mutex write_mutex_;
};

// OpenAI-compatible /v1/chat/completions client with retry/backoff, a
// concurrency cap, and an optional response cache.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(BackendConfig config);
    ~HttpChatBackend() override;

protected:
    ChatCompletion chat_raw(const ChatRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// OpenAI-compatible /v1/embeddings client.
class HttpEmbedBackend : public EmbedBackend {
public:
    explicit HttpEmbedBackend(BackendConfig config);
    ~HttpEmbedBackend() override;

protected:
    std::vector<std::vector<double>> embed_raw(const std::vector<std::string>& texts) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace knowhalu

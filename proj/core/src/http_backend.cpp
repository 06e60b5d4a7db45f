#include "knowhalu/http_backend.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

namespace {

struct ParsedUrl {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // e.g. "/v1" or ""
};

ParsedUrl parse_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url missing scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = base_url;
    } else {
        out.origin = base_url.substr(0, path_start);
        out.path_prefix = base_url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    }
    return out;
}

std::string api_key_from_env(const BackendConfig& config) {
    if (config.api_key_env.empty()) return {};
    const char* value = std::getenv(config.api_key_env.c_str());
    if (!value) throw ConfigError("API key environment variable not set: " + config.api_key_env);
    return value;
}

// Bounded in-flight request counter.
class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

struct SemaphoreGuard {
    Semaphore& sem;
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
};

json post_with_retry(httplib::Client& client, const std::string& path, const json& body,
                     const std::string& api_key, int max_retries) {
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    std::string payload = body.dump();
    int attempt = 0;
    std::chrono::milliseconds backoff(250);
    for (;;) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (res && res->status == 200) {
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw TransportError(std::string("malformed response JSON: ") + e.what());
            }
        }
        bool retryable = !res || res->status >= 500 || res->status == 429;
        if (!retryable) {
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + path + ": " +
                                 res->body.substr(0, 512));
        }
        if (attempt >= max_retries) {
            std::string detail = res ? ("HTTP " + std::to_string(res->status)) : "connection error";
            throw TransportError("request to " + path + " failed after " +
                                 std::to_string(attempt + 1) + " attempts (" + detail + ")");
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
        ++attempt;
    }
}

}  // namespace

bool ResponseCache::lookup(const std::string& fingerprint, ChatCompletion& out) const {
    std::filesystem::path path = std::filesystem::path(dir_) / (fingerprint + ".json");
    if (!std::filesystem::exists(path)) return false;
    json entry = json::parse(read_file(path.string()));
    out.text = entry.at("text").get<std::string>();
    out.tokens.clear();
    for (const auto& tok : entry.value("tokens", json::array()))
        out.tokens.push_back({tok.at("token").get<std::string>(), tok.at("logprob").get<double>()});
    out.finish_reason = finish_reason_from_name(entry.value("finish_reason", "stop"));
    return true;
}

void ResponseCache::store(const std::string& fingerprint, const ChatCompletion& completion) {
    json tokens = json::array();
    for (const auto& t : completion.tokens)
        tokens.push_back({{"token", t.token_text}, {"logprob", t.logprob}});
    json entry = {{"text", completion.text},
                  {"tokens", tokens},
                  {"finish_reason", finish_reason_name(completion.finish_reason)}};
    std::lock_guard lock(write_mutex_);
    std::filesystem::create_directories(dir_);
    atomic_write_file((std::filesystem::path(dir_) / (fingerprint + ".json")).string(), entry.dump());
}

struct HttpChatBackend::Impl {
    BackendConfig config;
    ParsedUrl url;
    std::string api_key;
    Semaphore semaphore;
    std::unique_ptr<ResponseCache> cache;

    explicit Impl(BackendConfig cfg)
        : config(std::move(cfg)),
          url(parse_base_url(config.base_url)),
          api_key(api_key_from_env(config)),
          semaphore(config.concurrency_limit) {
        if (!config.cache_dir.empty()) cache = std::make_unique<ResponseCache>(config.cache_dir);
    }
};

HttpChatBackend::HttpChatBackend(BackendConfig config) {
    config.validate();
    impl_ = std::make_unique<Impl>(std::move(config));
}

HttpChatBackend::~HttpChatBackend() = default;

ChatCompletion HttpChatBackend::chat_raw(const ChatRequest& request) {
    std::string fp = prompt_fingerprint(request);
    if (impl_->cache) {
        ChatCompletion cached;
        if (impl_->cache->lookup(fp, cached)) return cached;
    }

    json messages = json::array();
    for (const auto& m : request.messages)
        messages.push_back({{"role", role_name(m.role)}, {"content", m.text}});
    json body = {{"model", impl_->config.model_name},
                 {"messages", messages},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    if (!request.stop_markers.empty()) body["stop"] = request.stop_markers;
    if (request.want_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = 1;
    }

    SemaphoreGuard guard(impl_->semaphore);
    httplib::Client client(impl_->url.origin);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(
        impl_->config.request_timeout));
    client.set_connection_timeout(std::chrono::seconds(10));

    json response = post_with_retry(client, impl_->url.path_prefix + "/chat/completions", body,
                                    impl_->api_key, impl_->config.max_retries);

    const auto& choice = response.at("choices").at(0);
    ChatCompletion out;
    out.text = choice.at("message").at("content").is_null()
                   ? std::string()
                   : choice.at("message").at("content").get<std::string>();
    std::string finish = choice.value("finish_reason", "stop");
    if (finish == "content_filter")
        out.finish_reason = FinishReason::ContentFilter;
    else if (finish == "length")
        out.finish_reason = FinishReason::Length;
    else
        out.finish_reason = FinishReason::Stop;
    if (choice.contains("logprobs") && !choice.at("logprobs").is_null()) {
        for (const auto& tok : choice.at("logprobs").value("content", json::array()))
            out.tokens.push_back({tok.at("token").get<std::string>(), tok.at("logprob").get<double>()});
    }

    if (impl_->cache) impl_->cache->store(fp, out);
    return out;
}

struct HttpEmbedBackend::Impl {
    BackendConfig config;
    ParsedUrl url;
    std::string api_key;
    Semaphore semaphore;

    explicit Impl(BackendConfig cfg)
        : config(std::move(cfg)),
          url(parse_base_url(config.base_url)),
          api_key(api_key_from_env(config)),
          semaphore(config.concurrency_limit) {}
};

HttpEmbedBackend::HttpEmbedBackend(BackendConfig config) {
    config.validate();
    impl_ = std::make_unique<Impl>(std::move(config));
}

HttpEmbedBackend::~HttpEmbedBackend() = default;

std::vector<std::vector<double>> HttpEmbedBackend::embed_raw(const std::vector<std::string>& texts) {
    json body = {{"model", impl_->config.model_name}, {"input", texts}};
    SemaphoreGuard guard(impl_->semaphore);
    httplib::Client client(impl_->url.origin);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(
        impl_->config.request_timeout));
    json response = post_with_retry(client, impl_->url.path_prefix + "/embeddings", body,
                                    impl_->api_key, impl_->config.max_retries);
    std::vector<std::vector<double>> out(texts.size());
    for (const auto& item : response.at("data")) {
        size_t index = item.at("index").get<size_t>();
        if (index >= out.size()) throw TransportError("embedding index out of range");
        out[index] = item.at("embedding").get<std::vector<double>>();
    }
    return out;
}

}  // namespace knowhalu

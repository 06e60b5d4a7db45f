#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "knowhalu/errors.hpp"

namespace knowhalu {

enum class Role { System, User, Assistant };

const char* role_name(Role role);

struct ChatMessage {
    Role role = Role::User;
    std::string text;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;  // pipeline default; deterministic evaluation
    int max_tokens = 512;
    std::vector<std::string> stop_markers;
    bool want_logprobs = false;

    void validate() const;
};

struct TokenLogProb {
    std::string token_text;
    double logprob = 0.0;  // <= 0
};

enum class FinishReason { Stop, Length, ContentFilter, Refusal };

const char* finish_reason_name(FinishReason reason);
FinishReason finish_reason_from_name(const std::string& name);

struct ChatCompletion {
    std::string text;
    std::vector<TokenLogProb> tokens;  // empty when logprobs unavailable
    FinishReason finish_reason = FinishReason::Stop;
};

struct BackendConfig {
    std::string base_url;
    std::string model_name;
    std::string api_key_env;
    std::chrono::milliseconds request_timeout{60000};
    int max_retries = 3;       // <= 10
    int concurrency_limit = 4; // >= 1
    std::string cache_dir;     // empty disables the on-disk response cache

    void validate() const;
};

// Uniform chat interface. Implementations: HttpChatBackend, ScriptedChatBackend.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Returns the completion with text truncated at the earliest stop marker.
    ChatCompletion chat(const ChatRequest& request);

protected:
    virtual ChatCompletion chat_raw(const ChatRequest& request) = 0;
};

// Uniform embedding interface. All outputs are L2-normalized.
class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);

protected:
    virtual std::vector<std::vector<double>> embed_raw(const std::vector<std::string>& texts) = 0;
};

// Stable hash of the rendered messages plus sampling parameters. Keys the
// response cache and scripted transcripts.
std::string prompt_fingerprint(const ChatRequest& request);

// Truncates text (and its token list) at the earliest stop marker occurrence.
void apply_stop_markers(ChatCompletion& completion, const std::vector<std::string>& stop_markers);

// exp(logprob) of the token covering the first character of the LAST
// occurrence of label_text in completion.text. If the label start does not
// align to a token boundary, the covering token is used.
double first_token_confidence(const ChatCompletion& completion, const std::string& label_text);

void l2_normalize(std::vector<double>& v);

}  // namespace knowhalu

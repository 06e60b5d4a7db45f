#include "knowhalu/gateway.hpp"

#include <cmath>
#include <cstdio>

#include "knowhalu/util.hpp"

namespace knowhalu {

const char* role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

const char* finish_reason_name(FinishReason reason) {
    switch (reason) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::ContentFilter: return "content_filter";
        case FinishReason::Refusal: return "refusal";
    }
    return "stop";
}

FinishReason finish_reason_from_name(const std::string& name) {
    if (name == "stop") return FinishReason::Stop;
    if (name == "length") return FinishReason::Length;
    if (name == "content_filter") return FinishReason::ContentFilter;
    if (name == "refusal") return FinishReason::Refusal;
    throw Error("unknown finish_reason: " + name);
}

void ChatRequest::validate() const {
    if (messages.empty()) throw Error("ChatRequest: messages empty");
    if (messages.front().role == Role::Assistant)
        throw Error("ChatRequest: first message must be system or user");
    if (temperature < 0) throw Error("ChatRequest: negative temperature");
    if (max_tokens <= 0) throw Error("ChatRequest: max_tokens must be positive");
    for (const auto& s : stop_markers)
        if (s.empty()) throw Error("ChatRequest: empty stop marker");
}

void BackendConfig::validate() const {
    if (concurrency_limit < 1) throw Error("BackendConfig: concurrency_limit must be >= 1");
    if (max_retries < 0 || max_retries > 10)
        throw Error("BackendConfig: max_retries must be in [0, 10]");
}

std::string prompt_fingerprint(const ChatRequest& request) {
    // Canonical serialization: role and text per message with unit/record
    // separators, then the sampling parameters.
    std::string buf;
    for (const auto& m : request.messages) {
        buf += role_name(m.role);
        buf += '\x1f';
        buf += m.text;
        buf += '\x1e';
    }
    char params[64];
    std::snprintf(params, sizeof(params), "|t=%.6g|m=%d|", request.temperature, request.max_tokens);
    buf += params;
    for (const auto& s : request.stop_markers) {
        buf += s;
        buf += '\x1f';
    }
    return to_hex(fnv1a64(buf));
}

void apply_stop_markers(ChatCompletion& completion, const std::vector<std::string>& stop_markers) {
    size_t cut = std::string::npos;
    for (const auto& marker : stop_markers) {
        size_t pos = completion.text.find(marker);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut == std::string::npos) return;
    completion.text.resize(cut);
    // Trim the token list so concatenation still equals the text.
    std::vector<TokenLogProb> kept;
    size_t consumed = 0;
    for (auto& tok : completion.tokens) {
        if (consumed >= cut) break;
        if (consumed + tok.token_text.size() <= cut) {
            consumed += tok.token_text.size();
            kept.push_back(std::move(tok));
        } else {
            TokenLogProb partial = tok;
            partial.token_text = tok.token_text.substr(0, cut - consumed);
            kept.push_back(std::move(partial));
            consumed = cut;
        }
    }
    completion.tokens = std::move(kept);
}

ChatCompletion ChatBackend::chat(const ChatRequest& request) {
    request.validate();
    ChatCompletion completion = chat_raw(request);
    if (completion.finish_reason == FinishReason::Refusal ||
        completion.finish_reason == FinishReason::ContentFilter) {
        throw RefusalError("backend refused the request");
    }
    apply_stop_markers(completion, request.stop_markers);
    return completion;
}

std::vector<std::vector<double>> EmbedBackend::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error("embed: texts empty");
    for (const auto& t : texts)
        if (t.empty()) throw Error("embed: empty text");
    auto vectors = embed_raw(texts);
    if (vectors.size() != texts.size())
        throw DimensionMismatchError("embed: backend returned wrong vector count");
    size_t dim = vectors.empty() ? 0 : vectors.front().size();
    for (auto& v : vectors) {
        if (v.size() != dim) throw DimensionMismatchError("embed: ragged vectors");
        l2_normalize(v);
    }
    return vectors;
}

void l2_normalize(std::vector<double>& v) {
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 <= 0.0) throw DimensionMismatchError("embed: zero vector");
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
}

double first_token_confidence(const ChatCompletion& completion, const std::string& label_text) {
    if (completion.tokens.empty()) throw NoLogprobsError("completion carries no logprobs");
    size_t pos = completion.text.rfind(label_text);
    if (pos == std::string::npos)
        throw Error("label not found in completion text: " + label_text);
    size_t consumed = 0;
    for (const auto& tok : completion.tokens) {
        size_t end = consumed + tok.token_text.size();
        if (pos >= consumed && pos < end) return std::exp(tok.logprob);
        consumed = end;
    }
    throw Error("token stream does not cover label offset");
}

}  // namespace knowhalu

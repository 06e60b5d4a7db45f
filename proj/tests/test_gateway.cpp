#include <doctest.h>

#include <cmath>

#include "knowhalu/gateway.hpp"
#include "knowhalu/scripted_backend.hpp"

using namespace knowhalu;

namespace {

ChatRequest simple_request(const std::string& text) {
    ChatRequest r;
    r.messages = {{Role::System, "sys"}, {Role::User, text}};
    return r;
}

}  // namespace

TEST_CASE("ChatRequest::validate rejects malformed requests") {
    ChatRequest r;
    CHECK_THROWS_AS(r.validate(), Error);  // empty messages
    r = simple_request("hi");
    CHECK_NOTHROW(r.validate());
    r.temperature = -1.0;
    CHECK_THROWS_AS(r.validate(), Error);
    r = simple_request("hi");
    r.max_tokens = 0;
    CHECK_THROWS_AS(r.validate(), Error);
    r = simple_request("hi");
    r.stop_markers = {""};
    CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("prompt_fingerprint is stable and sensitive") {
    ChatRequest a = simple_request("question");
    CHECK(prompt_fingerprint(a) == prompt_fingerprint(a));
    CHECK(prompt_fingerprint(a).size() == 16);

    ChatRequest b = simple_request("question!");
    CHECK(prompt_fingerprint(a) != prompt_fingerprint(b));

    ChatRequest c = simple_request("question");
    c.temperature = 0.5;
    CHECK(prompt_fingerprint(a) != prompt_fingerprint(c));

    ChatRequest d = simple_request("question");
    d.stop_markers = {"#Question"};
    CHECK(prompt_fingerprint(a) != prompt_fingerprint(d));

    // role matters: swapping system/user flips the serialization
    ChatRequest e;
    e.messages = {{Role::User, "sys"}, {Role::System, "question"}};
    CHECK(prompt_fingerprint(a) != prompt_fingerprint(e));
}

TEST_CASE("apply_stop_markers truncates at the earliest marker") {
    ChatCompletion c;
    c.text = "alpha beta #Stop gamma #Halt delta";
    c.tokens = {{"alpha beta ", -0.1}, {"#Stop gam", -0.2}, {"ma #Halt delta", -0.3}};
    apply_stop_markers(c, {"#Halt", "#Stop"});
    CHECK(c.text == "alpha beta ");
    std::string concat;
    for (const auto& t : c.tokens) concat += t.token_text;
    CHECK(concat == c.text);
}

TEST_CASE("apply_stop_markers cuts a token mid-way") {
    ChatCompletion c;
    c.text = "yes#END tail";
    c.tokens = {{"ye", -0.5}, {"s#EN", -0.6}, {"D tail", -0.7}};
    apply_stop_markers(c, {"#END"});
    CHECK(c.text == "yes");
    REQUIRE(c.tokens.size() == 2);
    CHECK(c.tokens[1].token_text == "s");
    CHECK(c.tokens[1].logprob == -0.6);
}

TEST_CASE("apply_stop_markers is a no-op without occurrences") {
    ChatCompletion c;
    c.text = "plain text";
    c.tokens = {{"plain text", 0.0}};
    apply_stop_markers(c, {"#Question"});
    CHECK(c.text == "plain text");
    CHECK(c.tokens.size() == 1);
}

TEST_CASE("chat throws RefusalError on refusal finish reasons") {
    ScriptedTranscript t;
    ChatRequest r = simple_request("x");
    ChatCompletion refused;
    refused.finish_reason = FinishReason::Refusal;
    t.add(r, refused);
    ScriptedChatBackend backend(std::move(t));
    CHECK_THROWS_AS(backend.chat(r), RefusalError);
}

TEST_CASE("first_token_confidence reads the label's covering token") {
    ChatCompletion c = make_judgment_completion(
        "All aspects are supported, the judgment is CORRECT.", "CORRECT", 0.75);
    CHECK(first_token_confidence(c, "CORRECT") == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("first_token_confidence uses the last occurrence") {
    // INCORRECT contains CORRECT; the final verdict token carries the mass
    ChatCompletion c;
    c.tokens = {{"the claim is INCORRECT, so ", -0.05}, {"COR", std::log(0.6)}, {"RECT no", -0.01}};
    for (const auto& t : c.tokens) c.text += t.token_text;
    CHECK(first_token_confidence(c, "CORRECT") == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("first_token_confidence requires logprobs") {
    ChatCompletion c;
    c.text = "CORRECT";
    CHECK_THROWS_AS(first_token_confidence(c, "CORRECT"), NoLogprobsError);
}

TEST_CASE("embed validates counts, raggedness, and normalizes") {
    HashingEmbedder embedder(16);
    auto vecs = embedder.embed({"peace of westphalia", "star wars score"});
    REQUIRE(vecs.size() == 2);
    for (const auto& v : vecs) {
        double norm2 = 0;
        for (double x : v) norm2 += x * x;
        CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(embedder.embed({}), Error);
    CHECK_THROWS_AS(embedder.embed({""}), Error);
}

TEST_CASE("HashingEmbedder is deterministic and overlap-sensitive") {
    HashingEmbedder embedder(64);
    auto a = embedder.embed({"the treaty was signed in october"})[0];
    auto b = embedder.embed({"the treaty was signed in october"})[0];
    CHECK(a == b);

    auto c = embedder.embed({"treaty signed october", "completely different words here"});
    double sim_same = 0, sim_other = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        sim_same += a[i] * c[0][i];
        sim_other += a[i] * c[1][i];
    }
    CHECK(sim_same > sim_other);
}

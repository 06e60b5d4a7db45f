#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "knowhalu/retrieval.hpp"
#include "knowhalu/scripted_backend.hpp"
#include "knowhalu/util.hpp"

using namespace knowhalu;

namespace {

std::string words_text(std::mt19937_64& rng, size_t n) {
    static const char* pool[] = {"alpha", "beta",  "gamma", "delta", "epsilon",
                                 "zeta",  "theta", "iota",  "kappa", "lambda"};
    std::vector<std::string> out;
    for (size_t i = 0; i < n; ++i) out.push_back(pool[rng() % std::size(pool)]);
    return join(out, " ");
}

}  // namespace

TEST_CASE("chunk_document enforces the strict word bound and loses nothing") {
    std::mt19937_64 rng(42);
    for (int doc = 0; doc < 50; ++doc) {
        size_t n = 1 + rng() % 300;
        std::string text = words_text(rng, n);
        auto chunks = chunk_document("d" + std::to_string(doc), text, 40);
        std::vector<std::string> all_words;
        for (size_t i = 0; i < chunks.size(); ++i) {
            CHECK(chunks[i].word_count < 40);
            CHECK(chunks[i].word_count == split_words(chunks[i].text).size());
            CHECK(chunks[i].ordinal == i);
            auto w = split_words(chunks[i].text);
            all_words.insert(all_words.end(), w.begin(), w.end());
        }
        CHECK(all_words == split_words(text));
    }
    CHECK_THROWS_AS(chunk_document("d", "   "), EmptyDocumentError);
}

TEST_CASE("search matches brute-force cosine ranking with ordinal tie-break") {
    std::mt19937_64 rng(7);
    HashingEmbedder embedder(32);
    std::string text = words_text(rng, 900);
    auto chunks = chunk_document("doc", text, 12);
    DenseIndex index = build_index(chunks, embedder);

    for (int trial = 0; trial < 20; ++trial) {
        std::string query = words_text(rng, 3);
        auto qv = embedder.embed({query})[0];
        // independent oracle: argsort by dot product, ties by ordinal
        std::vector<std::pair<double, size_t>> scored;
        for (size_t i = 0; i < index.size(); ++i) {
            double dot = 0;
            for (size_t j = 0; j < qv.size(); ++j) dot += qv[j] * index.vectors()[i][j];
            scored.push_back({dot, i});
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (size_t k : {size_t{1}, size_t{3}, size_t{5}}) {
            auto hits = search(index, query, k, embedder);
            REQUIRE(hits.size() == std::min(k, index.size()));
            for (size_t i = 0; i < hits.size(); ++i) {
                CHECK(hits[i].id == "doc#" + std::to_string(scored[i].second));
                CHECK(hits[i].score == doctest::Approx(scored[i].first).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("empty index rejects search") {
    HashingEmbedder embedder(8);
    DenseIndex index;
    CHECK_THROWS_AS(search(index, "q", 2, embedder), EmptyIndexError);
}

TEST_CASE("index save/load round-trips") {
    std::mt19937_64 rng(3);
    HashingEmbedder embedder(16);
    auto chunks = chunk_document("doc", words_text(rng, 120), 20);
    DenseIndex index = build_index(chunks, embedder);

    auto dir = std::filesystem::temp_directory_path() / "knowhalu_index_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::string path = (dir / "doc.idx").string();
    index.save(path);
    DenseIndex loaded = DenseIndex::load(path);
    REQUIRE(loaded.size() == index.size());
    REQUIRE(loaded.dim() == index.dim());
    auto a = search(index, "alpha beta", 3, embedder);
    auto b = search(loaded, "alpha beta", 3, embedder);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-6));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("merge_formulation_results keeps specific-first order and dedupes") {
    auto p = [](const std::string& id) {
        Passage x;
        x.id = id;
        x.text = id;
        return x;
    };
    auto merged = merge_formulation_results({p("a"), p("b")}, {p("b"), p("c"), p("a"), p("d")});
    REQUIRE(merged.size() == 4);
    CHECK(merged[0].id == "a");
    CHECK(merged[1].id == "b");
    CHECK(merged[2].id == "c");
    CHECK(merged[3].id == "d");
}

TEST_CASE("format_passage uses the title or falls back to the id") {
    Passage p;
    p.id = "doc#3";
    p.text = "Some text.";
    CHECK(format_passage(p) == "Title: doc#3. Article: Some text.");
    p.title = "Peace of Westphalia";
    CHECK(format_passage(p) == "Title: Peace of Westphalia. Article: Some text.");
}

TEST_CASE("OffTheShelfRetriever always returns the dataset passage") {
    OffTheShelfRetriever r("ground truth passage");
    auto a = r.retrieve("any query", 2);
    auto b = r.retrieve("another query", 5);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK(a[0].id == b[0].id);
    CHECK(a[0].text == "ground truth passage");
}

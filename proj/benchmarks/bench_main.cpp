#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "knowhalu/aggregator.hpp"
#include "knowhalu/knowledge_forge.hpp"
#include "knowhalu/retrieval.hpp"
#include "knowhalu/scripted_backend.hpp"
#include "knowhalu/verdict.hpp"

namespace {

using namespace knowhalu;

std::string random_words(std::mt19937_64& rng, size_t n) {
    static const char* pool[] = {"treaty", "signed", "october", "empire",  "council", "network",
                                 "study",  "score",  "novel",   "program", "history", "summary"};
    std::string out;
    for (size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pool[rng() % std::size(pool)];
        if (i % 11 == 10) out += '.';
    }
    return out;
}

void BM_Search(benchmark::State& state) {
    std::mt19937_64 rng(7);
    HashingEmbedder embedder(128);
    auto chunks = chunk_document("doc", random_words(rng, 38 * static_cast<size_t>(state.range(0))));
    DenseIndex index = build_index(chunks, embedder);
    size_t i = 0;
    for (auto _ : state) {
        auto hits = search(index, "treaty signed october " + std::to_string(i++ % 97), 3, embedder);
        benchmark::DoNotOptimize(hits);
    }
}
BENCHMARK(BM_Search)->Arg(100)->Arg(1000);

void BM_Quantile(benchmark::State& state) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> samples(static_cast<size_t>(state.range(0)));
    for (auto& s : samples) s = dist(rng);
    for (auto _ : state) {
        double q = quantile(samples, 0.35);
        benchmark::DoNotOptimize(q);
    }
}
BENCHMARK(BM_Quantile)->Arg(100)->Arg(10000);

void BM_SegmentSummary(benchmark::State& state) {
    std::mt19937_64 rng(13);
    std::string summary = random_words(rng, static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        auto segments = segment_summary(summary, 30);
        benchmark::DoNotOptimize(segments);
    }
}
BENCHMARK(BM_SegmentSummary)->Arg(120)->Arg(1200);

void BM_ParseTriplets(benchmark::State& state) {
    std::string line =
        "(Peace of Westphalia, signed in, Munster and Osnabruck, Germany), "
        "(Joy Williams, did not compose, \"Star Wars\" score), "
        "(John Williams, composed, \"Star Wars\" score)";
    for (auto _ : state) {
        auto triplets = parse_triplets(line);
        benchmark::DoNotOptimize(triplets);
    }
}
BENCHMARK(BM_ParseTriplets);

}  // namespace

BENCHMARK_MAIN();

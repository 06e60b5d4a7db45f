#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "knowhalu/gateway.hpp"

namespace knowhalu {

struct Passage {
    std::string id;
    std::optional<std::string> title;
    std::string text;
    double score = 0.0;
};

// Serialization used in optimization prompts: "Title: <t>. Article: <text>".
std::string format_passage(const Passage& p);
std::string format_passages(const std::vector<Passage>& passages);

struct Chunk {
    std::string doc_id;
    size_t ordinal = 0;
    std::string text;
    size_t word_count = 0;
};

// Greedy packing of whitespace-delimited words into chunks with
// word_count < max_words (strict). Words are never split.
std::vector<Chunk> chunk_document(const std::string& doc_id, const std::string& text,
                                  size_t max_words = 40);

class DenseIndex {
public:
    DenseIndex() = default;
    DenseIndex(std::vector<std::vector<double>> vectors, std::vector<Chunk> chunks);

    size_t size() const { return chunks_.size(); }
    size_t dim() const { return vectors_.empty() ? 0 : vectors_.front().size(); }
    const std::vector<Chunk>& chunks() const { return chunks_; }
    const std::vector<std::vector<double>>& vectors() const { return vectors_; }

    // Binary matrix file plus a sidecar JSON chunk manifest at path + ".chunks.json".
    void save(const std::string& path) const;
    static DenseIndex load(const std::string& path);

private:
    std::vector<std::vector<double>> vectors_;  // rows unit-norm, aligned with chunks_
    std::vector<Chunk> chunks_;
};

DenseIndex build_index(const std::vector<Chunk>& chunks, EmbedBackend& gateway);

// Top-k by cosine similarity (dot product on unit-norm rows), descending
// score, ties broken by ascending ordinal.
std::vector<Passage> search(const DenseIndex& index, const std::string& query_text, size_t k,
                            EmbedBackend& gateway);

// Specific hits first, then general hits, deduplicated by id keeping the
// first occurrence.
std::vector<Passage> merge_formulation_results(const std::vector<Passage>& specific_hits,
                                               const std::vector<Passage>& general_hits);

// Per-sub-query passage source used by the reasoning loop.
class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::vector<Passage> retrieve(const std::string& query_text, size_t k) = 0;
};

class LocalIndexRetriever : public Retriever {
public:
    LocalIndexRetriever(const DenseIndex& index, EmbedBackend& gateway)
        : index_(index), gateway_(gateway) {}
    std::vector<Passage> retrieve(const std::string& query_text, size_t k) override {
        return search(index_, query_text, k, gateway_);
    }

private:
    const DenseIndex& index_;
    EmbedBackend& gateway_;
};

// Always returns the dataset-provided ground-truth passage, bypassing retrieval.
class OffTheShelfRetriever : public Retriever {
public:
    explicit OffTheShelfRetriever(std::string knowledge_text);
    std::vector<Passage> retrieve(const std::string& query_text, size_t k) override;

private:
    std::vector<Passage> passages_;
};

// HTTP passage-search service client (POST /search with {query, k}).
class ExternalSearchClient : public Retriever {
public:
    ExternalSearchClient(std::string base_url, std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
    std::vector<Passage> retrieve(const std::string& query_text, size_t k) override;

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

std::vector<Passage> external_search(ExternalSearchClient& client, const std::string& query_text,
                                     size_t k);

}  // namespace knowhalu

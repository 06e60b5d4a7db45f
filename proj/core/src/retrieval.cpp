#include "knowhalu/retrieval.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

std::string format_passage(const Passage& p) {
    std::string title = p.title.value_or(p.id);
    return "Title: " + title + ". Article: " + p.text;
}

std::string format_passages(const std::vector<Passage>& passages) {
    std::vector<std::string> lines;
    lines.reserve(passages.size());
    for (const auto& p : passages) lines.push_back(format_passage(p));
    return join(lines, "\n");
}

std::vector<Chunk> chunk_document(const std::string& doc_id, const std::string& text,
                                  size_t max_words) {
    if (trim(text).empty()) throw EmptyDocumentError("document is empty: " + doc_id);
    if (max_words < 1) throw Error("chunk_document: max_words must be >= 1");
    std::vector<std::string> words = split_words(text);
    // strict "fewer than max_words" bound
    size_t cap = max_words > 1 ? max_words - 1 : 1;
    std::vector<Chunk> chunks;
    size_t pos = 0;
    size_t ordinal = 0;
    while (pos < words.size()) {
        size_t take = std::min(cap, words.size() - pos);
        Chunk chunk;
        chunk.doc_id = doc_id;
        chunk.ordinal = ordinal++;
        chunk.word_count = take;
        chunk.text = join(std::vector<std::string>(words.begin() + static_cast<long>(pos),
                                                   words.begin() + static_cast<long>(pos + take)),
                          " ");
        chunks.push_back(std::move(chunk));
        pos += take;
    }
    return chunks;
}

DenseIndex::DenseIndex(std::vector<std::vector<double>> vectors, std::vector<Chunk> chunks)
    : vectors_(std::move(vectors)), chunks_(std::move(chunks)) {
    if (vectors_.size() != chunks_.size())
        throw Error("DenseIndex: row count does not match chunk count");
}

DenseIndex build_index(const std::vector<Chunk>& chunks, EmbedBackend& gateway) {
    if (chunks.empty()) throw EmptyIndexError("build_index: no chunks");
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    return DenseIndex(gateway.embed(texts), chunks);
}

std::vector<Passage> search(const DenseIndex& index, const std::string& query_text, size_t k,
                            EmbedBackend& gateway) {
    if (index.size() == 0) throw EmptyIndexError("search: empty index");
    if (k < 1) throw Error("search: k must be >= 1");
    std::vector<double> q = gateway.embed({query_text}).front();
    if (q.size() != index.dim()) throw DimensionMismatchError("search: query dim mismatch");

    std::vector<std::pair<double, size_t>> scored;  // (score, row)
    scored.reserve(index.size());
    for (size_t row = 0; row < index.size(); ++row) {
        const auto& v = index.vectors()[row];
        double dot = 0.0;
        for (size_t i = 0; i < q.size(); ++i) dot += v[i] * q[i];
        scored.emplace_back(dot, row);
    }
    size_t top = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(top), scored.end(),
                      [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return index.chunks()[a.second].ordinal < index.chunks()[b.second].ordinal;
                      });
    std::vector<Passage> out;
    out.reserve(top);
    for (size_t i = 0; i < top; ++i) {
        const Chunk& chunk = index.chunks()[scored[i].second];
        Passage p;
        p.id = chunk.doc_id + "#" + std::to_string(chunk.ordinal);
        p.title = chunk.doc_id;
        p.text = chunk.text;
        p.score = scored[i].first;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Passage> merge_formulation_results(const std::vector<Passage>& specific_hits,
                                               const std::vector<Passage>& general_hits) {
    std::vector<Passage> out;
    std::unordered_set<std::string> seen;
    for (const auto* hits : {&specific_hits, &general_hits}) {
        for (const auto& p : *hits) {
            if (seen.insert(p.id).second) out.push_back(p);
        }
    }
    return out;
}

namespace {

constexpr char kIndexMagic[4] = {'K', 'H', 'I', 'X'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void DenseIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write index: " + path);
    out.write(kIndexMagic, 4);
    write_u32(out, static_cast<std::uint32_t>(dim()));
    write_u32(out, static_cast<std::uint32_t>(size()));
    for (const auto& row : vectors_) {
        for (double x : row) {
            float f = static_cast<float>(x);
            out.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
    }
    if (!out) throw Error("index write failed: " + path);
    out.close();

    json manifest;
    manifest["n_chunks"] = size();
    json chunk_table = json::array();
    for (const auto& c : chunks_) {
        chunk_table.push_back({{"doc_id", c.doc_id},
                               {"ordinal", c.ordinal},
                               {"text", c.text},
                               {"word_count", c.word_count}});
    }
    manifest["chunks"] = chunk_table;
    atomic_write_file(path + ".chunks.json", manifest.dump(2));
}

DenseIndex DenseIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open index: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kIndexMagic, 4) != 0)
        throw Error("bad index magic: " + path);
    std::uint32_t dim = read_u32(in);
    std::uint32_t n = read_u32(in);
    std::vector<std::vector<double>> vectors(n, std::vector<double>(dim));
    for (auto& row : vectors) {
        for (double& x : row) {
            float f = 0.0f;
            in.read(reinterpret_cast<char*>(&f), sizeof(f));
            x = static_cast<double>(f);
        }
    }
    if (!in) throw Error("truncated index file: " + path);

    json manifest = json::parse(read_file(path + ".chunks.json"));
    std::vector<Chunk> chunks;
    for (const auto& entry : manifest.at("chunks")) {
        Chunk c;
        c.doc_id = entry.at("doc_id").get<std::string>();
        c.ordinal = entry.at("ordinal").get<size_t>();
        c.text = entry.at("text").get<std::string>();
        c.word_count = entry.at("word_count").get<size_t>();
        chunks.push_back(std::move(c));
    }
    return DenseIndex(std::move(vectors), std::move(chunks));
}

OffTheShelfRetriever::OffTheShelfRetriever(std::string knowledge_text) {
    Passage p;
    p.id = "off_the_shelf";
    p.title = "Knowledge";
    p.text = std::move(knowledge_text);
    p.score = 1.0;
    if (!p.text.empty()) passages_.push_back(std::move(p));
}

std::vector<Passage> OffTheShelfRetriever::retrieve(const std::string&, size_t) {
    return passages_;
}

ExternalSearchClient::ExternalSearchClient(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {}

std::vector<Passage> ExternalSearchClient::retrieve(const std::string& query_text, size_t k) {
    httplib::Client client(base_url_);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));
    json body = {{"query", query_text}, {"k", k}};
    auto res = client.Post("/search", body.dump(), "application/json");
    if (!res) throw ServiceUnavailableError("search service unreachable: " + base_url_);
    if (res->status != 200)
        throw TransportError("search service HTTP " + std::to_string(res->status));
    json hits;
    try {
        hits = json::parse(res->body);
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed search response: ") + e.what());
    }
    std::vector<Passage> out;
    std::unordered_set<std::string> seen;
    for (const auto& hit : hits) {
        Passage p;
        p.id = hit.at("id").get<std::string>();
        if (hit.contains("title") && !hit.at("title").is_null())
            p.title = hit.at("title").get<std::string>();
        p.text = hit.at("text").get<std::string>();
        p.score = hit.value("score", 0.0);
        if (seen.insert(p.id).second) out.push_back(std::move(p));
    }
    return out;
}

std::vector<Passage> external_search(ExternalSearchClient& client, const std::string& query_text,
                                     size_t k) {
    return client.retrieve(query_text, k);
}

}  // namespace knowhalu

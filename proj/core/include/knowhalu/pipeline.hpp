#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "knowhalu/aggregator.hpp"
#include "knowhalu/evaluator.hpp"
#include "knowhalu/fabrication_filter.hpp"
#include "knowhalu/query_engine.hpp"
#include "knowhalu/verdict.hpp"

namespace knowhalu {

enum class KnowledgeSource { OffTheShelf, Retrieval };

const char* knowledge_source_name(KnowledgeSource s);
KnowledgeSource knowledge_source_from_name(const std::string& name);

// Per-item call counters, keyed by stage. Atomic: the two knowledge forms of
// one item run concurrently.
struct CallCounts {
    std::atomic<int> extraction{0};
    std::atomic<int> query{0};
    std::atomic<int> optimize{0};
    std::atomic<int> judge{0};
    std::atomic<int> retrieval{0};

    std::map<std::string, int> snapshot() const;
};

// Classifies each request by its stage signature (stop markers / logprobs)
// and bumps the matching counter before delegating.
class CountingChatBackend : public ChatBackend {
public:
    CountingChatBackend(ChatBackend& inner, CallCounts& counts)
        : inner_(inner), counts_(counts) {}

protected:
    ChatCompletion chat_raw(const ChatRequest& request) override;

private:
    ChatBackend& inner_;
    CallCounts& counts_;
};

class CountingRetriever : public Retriever {
public:
    CountingRetriever(Retriever& inner, CallCounts& counts) : inner_(inner), counts_(counts) {}
    std::vector<Passage> retrieve(const std::string& query_text, size_t k) override {
        ++counts_.retrieval;
        return inner_.retrieve(query_text, k);
    }

private:
    Retriever& inner_;
    CallCounts& counts_;
};

struct FormResult {
    ReasoningTrace trace;
    Judgment judgment;
};

struct SegmentResult {
    std::string text;
    std::map<std::string, FormResult> per_form;  // keyed by form name
    JudgmentLabel aggregated = JudgmentLabel::Inconclusive;
};

struct DetectionRecord {
    std::string item_id;
    Task task = Task::QA;
    std::optional<GoldLabel> gold;
    std::optional<ExtractionResult> phase1;          // QA only
    std::map<std::string, FormResult> per_form;      // QA, keyed by form name
    std::vector<SegmentResult> segments;             // summarization only
    FinalOutcome final = FinalOutcome::Abstain;
    std::map<std::string, int> call_counts;
    std::vector<std::string> notes;

    // Single-line JSON, stable key order; one line per record in results files.
    std::string to_json() const;
    static DetectionRecord from_json(const std::string& json_text);

    // Full traces for the sidecar file (pretty-printed).
    std::string traces_json() const;
};

struct PipelineConfig {
    Task task = Task::QA;
    KnowledgeSource knowledge_source = KnowledgeSource::OffTheShelf;
    std::vector<KnowledgeForm> forms = {KnowledgeForm::Unstructured, KnowledgeForm::Structured};
    Formulation mode = Formulation::Combined;
    size_t k = 2;  // 3 for summarization
    size_t max_steps = 8;
    size_t max_knowledge_chars = 8000;
    Thresholds thresholds;
    size_t workers = 1;
    size_t segment_max_words = 30;
    size_t chunk_max_words = 40;

    void validate() const;
};

// Shared services; the pipeline owns none of them.
struct PipelineContext {
    const PromptLibrary* prompts = nullptr;
    ChatBackend* chat = nullptr;
    EmbedBackend* embedder = nullptr;  // summarization path
    Retriever* retriever = nullptr;    // QA with knowledge_source=Retrieval
};

// Phase 1 then per-form Phase 2 with aggregation. Stage errors downgrade the
// item to abstain with the reason noted; an item never aborts a batch.
DetectionRecord detect_qa(const DatasetItem& item, const PipelineConfig& config,
                          const PipelineContext& ctx);

// Segments the summary, checks each segment against a local dense index over
// the document, and composes the verdict (any non-CORRECT segment wins).
DetectionRecord detect_summary(const DatasetItem& item, const PipelineConfig& config,
                               const PipelineContext& ctx);

DetectionRecord detect(const DatasetItem& item, const PipelineConfig& config,
                       const PipelineContext& ctx);

// Bounded worker pool over independent items; records come back in item
// order, so output bytes do not depend on the worker count. Writes the JSONL
// results file atomically and one trace sidecar per item under traces_dir
// (empty traces_dir skips sidecars).
std::vector<DetectionRecord> run_batch(const std::vector<DatasetItem>& items,
                                       const PipelineConfig& config, const PipelineContext& ctx,
                                       const std::string& results_path,
                                       const std::string& traces_dir);

}  // namespace knowhalu

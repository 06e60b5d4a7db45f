#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "knowhalu/aggregator.hpp"
#include "knowhalu/prompt_library.hpp"

namespace knowhalu {

using Rational = boost::rational<std::int64_t>;

struct RawRecord {
    // QA: knowledge/question/right_answer/hallucinated_answer
    // Summarization: document/right_summary/hallucinated_summary
    std::string knowledge;
    std::string question;   // QA only
    std::string document;   // summarization only
    std::string right;
    std::string hallucinated;
};

struct DatasetItem {
    std::string id;
    Task task = Task::QA;
    std::string question;   // question (QA) or document (summarization)
    std::string candidate;  // answer or summary under test
    GoldLabel gold = GoldLabel::Faithful;
    std::optional<std::string> off_the_shelf_knowledge;
};

// One JSON object per line; malformed lines fail fast with the line number.
std::vector<RawRecord> load_dataset(const std::string& path, Task task);

// Seeded sample of n_pairs records without replacement; each expands into a
// faithful and a hallucinated item. PRNG: std::mt19937_64 with rejection
// sampling, so published seeds reproduce selections bit-exactly.
std::vector<DatasetItem> build_balanced_testset(const std::vector<RawRecord>& records,
                                                size_t n_pairs, std::uint64_t seed, Task task);

enum class FinalOutcome { Hallucinated, Faithful, Abstain };

const char* final_outcome_name(FinalOutcome o);
FinalOutcome final_outcome_from_name(const std::string& name);

struct Outcome {
    GoldLabel gold = GoldLabel::Faithful;
    FinalOutcome final = FinalOutcome::Abstain;
};

struct MetricsReport {
    std::int64_t n_pos = 0, n_neg = 0;
    std::int64_t tp = 0, fn_wrong = 0, fn_abstain = 0;
    std::int64_t tn = 0, fp_wrong = 0, fp_abstain = 0;

    // percentages as exact rationals
    Rational tpr() const;
    Rational tnr() const;
    Rational avg_acc() const;
    Rational arp() const;
    Rational arn() const;

    std::string to_json() const;
    std::string to_table() const;
};

// Formats an exact percentage to two decimals with round-half-up.
std::string format_percent(const Rational& value);

MetricsReport score(const std::vector<Outcome>& outcomes);

}  // namespace knowhalu

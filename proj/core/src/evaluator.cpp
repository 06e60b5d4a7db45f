#include "knowhalu/evaluator.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

std::vector<RawRecord> load_dataset(const std::string& path, Task task) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset: " + path);
    std::vector<RawRecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        RawRecord record;
        try {
            if (task == Task::QA) {
                record.question = obj.at("question").get<std::string>();
                record.right = obj.at("right_answer").get<std::string>();
                record.hallucinated = obj.at("hallucinated_answer").get<std::string>();
                record.knowledge = obj.value("knowledge", "");
            } else {
                record.document = obj.at("document").get<std::string>();
                record.right = obj.at("right_summary").get<std::string>();
                record.hallucinated = obj.at("hallucinated_summary").get<std::string>();
            }
        } catch (const json::exception& e) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": missing field (" +
                             e.what() + ")");
        }
        if (record.right.empty() || record.hallucinated.empty())
            throw ParseError("dataset line " + std::to_string(line_no) + ": empty candidate");
        records.push_back(std::move(record));
    }
    return records;
}

namespace {

// portable bounded draw: rejection sampling over the low bits
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          (std::numeric_limits<std::uint64_t>::max() % bound);
    for (;;) {
        std::uint64_t x = rng();
        if (x < limit) return x % bound;
    }
}

}  // namespace

std::vector<DatasetItem> build_balanced_testset(const std::vector<RawRecord>& records,
                                                size_t n_pairs, std::uint64_t seed, Task task) {
    if (n_pairs > records.size())
        throw NotEnoughRecordsError("requested " + std::to_string(n_pairs) + " pairs from " +
                                    std::to_string(records.size()) + " records");
    // partial Fisher-Yates over index array
    std::vector<size_t> indices(records.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < n_pairs; ++i) {
        size_t j = i + static_cast<size_t>(bounded_draw(rng, indices.size() - i));
        std::swap(indices[i], indices[j]);
    }

    std::vector<DatasetItem> items;
    items.reserve(2 * n_pairs);
    for (size_t i = 0; i < n_pairs; ++i) {
        const RawRecord& record = records[indices[i]];
        for (bool hallucinated : {false, true}) {
            DatasetItem item;
            item.task = task;
            item.id = std::to_string(indices[i]) + (hallucinated ? "-hallucinated" : "-faithful");
            item.question = task == Task::QA ? record.question : record.document;
            item.candidate = hallucinated ? record.hallucinated : record.right;
            item.gold = hallucinated ? GoldLabel::Hallucinated : GoldLabel::Faithful;
            if (task == Task::QA && !record.knowledge.empty())
                item.off_the_shelf_knowledge = record.knowledge;
            items.push_back(std::move(item));
        }
    }
    return items;
}

const char* final_outcome_name(FinalOutcome o) {
    switch (o) {
        case FinalOutcome::Hallucinated: return "hallucinated";
        case FinalOutcome::Faithful: return "faithful";
        case FinalOutcome::Abstain: return "abstain";
    }
    return "abstain";
}

FinalOutcome final_outcome_from_name(const std::string& name) {
    if (name == "hallucinated") return FinalOutcome::Hallucinated;
    if (name == "faithful") return FinalOutcome::Faithful;
    if (name == "abstain") return FinalOutcome::Abstain;
    throw Error("unknown final outcome: " + name);
}

MetricsReport score(const std::vector<Outcome>& outcomes) {
    if (outcomes.empty()) throw DegenerateClassError("no outcomes to score");
    MetricsReport report;
    for (const auto& o : outcomes) {
        if (o.gold == GoldLabel::Hallucinated) {
            ++report.n_pos;
            if (o.final == FinalOutcome::Hallucinated) ++report.tp;
            else if (o.final == FinalOutcome::Abstain) ++report.fn_abstain;
            else ++report.fn_wrong;
        } else {
            ++report.n_neg;
            if (o.final == FinalOutcome::Faithful) ++report.tn;
            else if (o.final == FinalOutcome::Abstain) ++report.fp_abstain;
            else ++report.fp_wrong;
        }
    }
    if (report.n_pos == 0 || report.n_neg == 0)
        throw DegenerateClassError("both classes must be present");
    return report;
}

Rational MetricsReport::tpr() const { return Rational(100 * tp, n_pos); }
Rational MetricsReport::tnr() const { return Rational(100 * tn, n_neg); }
Rational MetricsReport::avg_acc() const { return (tpr() + tnr()) / 2; }
Rational MetricsReport::arp() const { return Rational(100 * fn_abstain, n_pos); }
Rational MetricsReport::arn() const { return Rational(100 * fp_abstain, n_neg); }

std::string format_percent(const Rational& value) {
    // round half up at two decimals, exactly
    Rational scaled = value * 100;  // hundredths of a percent
    std::int64_t floor_val = scaled.numerator() / scaled.denominator();
    if (scaled.numerator() % scaled.denominator() != 0 && scaled.numerator() < 0) --floor_val;
    Rational frac = scaled - floor_val;
    std::int64_t hundredths = floor_val + (frac >= Rational(1, 2) ? 1 : 0);
    std::int64_t whole = hundredths / 100;
    std::int64_t cents = hundredths % 100;
    if (cents < 0) {
        cents += 100;
        --whole;
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld", static_cast<long long>(whole),
                  static_cast<long long>(cents));
    return buf;
}

std::string MetricsReport::to_json() const {
    json root;
    root["n_pos"] = n_pos;
    root["n_neg"] = n_neg;
    root["counts"] = {{"tp", tp},           {"fn_wrong", fn_wrong}, {"fn_abstain", fn_abstain},
                      {"tn", tn},           {"fp_wrong", fp_wrong}, {"fp_abstain", fp_abstain}};
    root["tpr"] = format_percent(tpr());
    root["tnr"] = format_percent(tnr());
    root["avg_acc"] = format_percent(avg_acc());
    root["arp"] = format_percent(arp());
    root["arn"] = format_percent(arn());
    return root.dump(2);
}

std::string MetricsReport::to_table() const {
    bool abstentions = fn_abstain > 0 || fp_abstain > 0;
    std::ostringstream out;
    out << "TPR (%)   TNR (%)   Avg Acc (%)";
    if (abstentions) out << "   ARP (%)   ARN (%)";
    out << "\n";
    auto cell = [](const std::string& s) {
        std::string padded = s;
        while (padded.size() < 10) padded += ' ';
        return padded;
    };
    out << cell(format_percent(tpr())) << cell(format_percent(tnr()))
        << cell(format_percent(avg_acc()));
    if (abstentions) out << "   " << cell(format_percent(arp())) << cell(format_percent(arn()));
    out << "\n";
    return out.str();
}

}  // namespace knowhalu

#include "knowhalu/aggregator.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "knowhalu/util.hpp"

namespace knowhalu {

using nlohmann::json;

Judgment aggregate(const Judgment& base, const Judgment& supplement, const Thresholds& t) {
    if (base.label == JudgmentLabel::Inconclusive) return supplement;
    if (base.confidence < t.delta1 && supplement.confidence > t.delta2) return supplement;
    return base;
}

double quantile(std::vector<double> samples, double q) {
    if (samples.empty()) throw EmptySamplesError("quantile of empty sample set");
    std::sort(samples.begin(), samples.end());
    double h = q * static_cast<double>(samples.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= samples.size()) return samples.back();
    double frac = h - static_cast<double>(lo);
    return samples[lo] + frac * (samples[lo + 1] - samples[lo]);
}

const char* gold_label_name(GoldLabel g) {
    return g == GoldLabel::Hallucinated ? "hallucinated" : "faithful";
}

GoldLabel gold_label_from_name(const std::string& name) {
    if (name == "hallucinated") return GoldLabel::Hallucinated;
    if (name == "faithful") return GoldLabel::Faithful;
    throw Error("unknown gold label: " + name);
}

double aggregated_average_accuracy(const std::vector<CalibrationSample>& samples,
                                   const Thresholds& t) {
    // average of per-class accuracies; INCONCLUSIVE finals count as wrong
    size_t n_pos = 0, n_neg = 0, tp = 0, tn = 0;
    for (const auto& sample : samples) {
        Judgment final = aggregate(sample.base, sample.supplement, t);
        if (sample.gold_label == GoldLabel::Hallucinated) {
            ++n_pos;
            if (final.label == JudgmentLabel::Incorrect) ++tp;
        } else {
            ++n_neg;
            if (final.label == JudgmentLabel::Correct) ++tn;
        }
    }
    if (n_pos == 0 || n_neg == 0)
        throw InsufficientSamplesError("need both hallucinated and faithful samples");
    double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
    double tnr = static_cast<double>(tn) / static_cast<double>(n_neg);
    return 100.0 * (tpr + tnr) / 2.0;
}

CalibrationResult calibrate(const std::vector<CalibrationSample>& samples) {
    bool has_pos = false, has_neg = false;
    for (const auto& s : samples) {
        if (s.gold_label == GoldLabel::Hallucinated) has_pos = true;
        else has_neg = true;
    }
    if (!has_pos || !has_neg)
        throw InsufficientSamplesError("calibration needs both classes");

    std::vector<double> base_conf, supp_conf;
    base_conf.reserve(samples.size());
    supp_conf.reserve(samples.size());
    for (const auto& s : samples) {
        base_conf.push_back(s.base.confidence);
        supp_conf.push_back(s.supplement.confidence);
    }
    KnowledgeForm base_form = samples.front().base.form;

    CalibrationResult result;
    bool have_best = false;
    for (int i = 1; i <= 19; ++i) {
        double q1 = 0.05 * i;
        double delta1 = quantile(base_conf, q1);
        for (int j = i; j <= 19; ++j) {
            double q2 = 0.05 * j;
            GridCell cell;
            cell.q1 = q1;
            cell.q2 = q2;
            cell.delta1 = delta1;
            cell.delta2 = quantile(supp_conf, q2);
            Thresholds t{cell.delta1, cell.delta2, base_form, q1, q2};
            cell.avg_acc = aggregated_average_accuracy(samples, t);
            result.grid.push_back(cell);
            // strict improvement only: ties keep the smaller (q1, q2)
            if (!have_best || cell.avg_acc > result.validation_avg_acc) {
                have_best = true;
                result.validation_avg_acc = cell.avg_acc;
                result.thresholds = t;
            }
        }
    }
    return result;
}

std::string CalibrationResult::to_json() const {
    json root;
    root["base_form"] = form_name(thresholds.base_form);
    root["q1"] = thresholds.q1 ? json(*thresholds.q1) : json();
    root["q2"] = thresholds.q2 ? json(*thresholds.q2) : json();
    root["delta1"] = thresholds.delta1;
    root["delta2"] = thresholds.delta2;
    root["validation_avg_acc"] = validation_avg_acc;
    json grid_json = json::array();
    for (const auto& cell : grid)
        grid_json.push_back({{"q1", cell.q1},
                             {"q2", cell.q2},
                             {"delta1", cell.delta1},
                             {"delta2", cell.delta2},
                             {"avg_acc", cell.avg_acc}});
    root["grid"] = std::move(grid_json);
    return root.dump(2);
}

CalibrationResult CalibrationResult::from_json(const std::string& json_text) {
    json root = json::parse(json_text);
    CalibrationResult result;
    result.thresholds.base_form = form_from_name(root.at("base_form").get<std::string>());
    if (!root.at("q1").is_null()) result.thresholds.q1 = root.at("q1").get<double>();
    if (!root.at("q2").is_null()) result.thresholds.q2 = root.at("q2").get<double>();
    result.thresholds.delta1 = root.at("delta1").get<double>();
    result.thresholds.delta2 = root.at("delta2").get<double>();
    result.validation_avg_acc = root.value("validation_avg_acc", 0.0);
    for (const auto& cell : root.value("grid", json::array())) {
        result.grid.push_back({cell.at("q1").get<double>(), cell.at("q2").get<double>(),
                               cell.at("delta1").get<double>(), cell.at("delta2").get<double>(),
                               cell.at("avg_acc").get<double>()});
    }
    return result;
}

}  // namespace knowhalu

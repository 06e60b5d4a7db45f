#pragma once

#include <optional>
#include <string>
#include <vector>

#include "knowhalu/verdict.hpp"

namespace knowhalu {

struct Thresholds {
    double delta1 = 1.0;  // in (0,1]
    double delta2 = 1.0;  // in (0,1]
    KnowledgeForm base_form = KnowledgeForm::Unstructured;
    std::optional<double> q1;  // quantile provenance, [0.05, 0.95]
    std::optional<double> q2;
};

// Fusion of base and supplement judgments: INCONCLUSIVE base yields the
// supplement; otherwise the supplement wins only when the base confidence is
// strictly below delta1 and the supplement confidence strictly above delta2.
Judgment aggregate(const Judgment& base, const Judgment& supplement, const Thresholds& t);

// Linear interpolation between order statistics: h = q*(n-1).
double quantile(std::vector<double> samples, double q);

enum class GoldLabel { Hallucinated, Faithful };

const char* gold_label_name(GoldLabel g);
GoldLabel gold_label_from_name(const std::string& name);

struct CalibrationSample {
    std::string item_id;
    Judgment base;
    Judgment supplement;
    GoldLabel gold_label = GoldLabel::Faithful;
};

struct GridCell {
    double q1 = 0.0;
    double q2 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double avg_acc = 0.0;  // percentage
};

struct CalibrationResult {
    Thresholds thresholds;
    double validation_avg_acc = 0.0;  // percentage
    std::vector<GridCell> grid;       // all 190 evaluated cells

    std::string to_json() const;
    static CalibrationResult from_json(const std::string& json_text);
};

// Quantile-grid threshold search: q1 in {0.05..0.95}, q2 in {q1..0.95},
// step 0.05; argmax of average accuracy with INCONCLUSIVE finals counted
// wrong; ties broken by smaller q1 then smaller q2.
CalibrationResult calibrate(const std::vector<CalibrationSample>& samples);

// Average accuracy (percent) of aggregated judgments over the samples.
double aggregated_average_accuracy(const std::vector<CalibrationSample>& samples,
                                   const Thresholds& t);

}  // namespace knowhalu

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwat/cost.hpp"
#include "cwat/model.hpp"
#include "cwat/preprocess.hpp"

// Binary metrics with abnormal as the positive class.
namespace cwat {

struct Prediction {
  std::string case_id;
  int label = 0;  // 1 = abnormal
  int pred = 0;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Throws InputError on empty input or non-binary labels/predictions.
ConfusionCounts confusion(std::span<const Prediction> preds);

// Each rate is empty (reported as "n/a") when its denominator is zero.
struct Rates {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> accuracy;
};

Rates rates(const ConfusionCounts& c);

// One prediction per case, in order of first appearance: positive iff
// strictly more than half of the case's signals are predicted positive.
// The case label is the label its signals share (DataError if they differ).
std::vector<Prediction> per_case_vote(std::span<const Prediction> signal_preds);

struct EvaluationReport {
  ConfusionCounts per_signal;
  ConfusionCounts per_case;
  Rates per_signal_rates;
  Rates per_case_rates;
};

EvaluationReport evaluate_predictions(std::span<const Prediction> signal_preds);

// Runs the model in evaluation mode on every segment.
std::vector<Prediction> predict_segments(std::span<const Segment> segments,
                                         const ModelParams& params, const ModelConfig& config);

nlohmann::json rates_json(const ConfusionCounts& c, const Rates& r);
nlohmann::json cost_json(const CostReport& report);
// {per_signal: {...}, per_case: {...}, cost: {...}}; cost omitted if null.
nlohmann::json report_json(const EvaluationReport& report, const CostReport* cost);

// Plain-text table of the three rates per evaluation level.
std::string format_metrics_table(const EvaluationReport& report);
std::string format_rate(const std::optional<double>& value);

}  // namespace cwat

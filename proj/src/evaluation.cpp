#include "cwat/evaluation.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "cwat/error.hpp"
#include "cwat/random.hpp"

namespace cwat {

ConfusionCounts confusion(std::span<const Prediction> preds) {
  if (preds.empty()) throw InputError("confusion: no predictions");
  ConfusionCounts c;
  for (const auto& p : preds) {
    if ((p.label != 0 && p.label != 1) || (p.pred != 0 && p.pred != 1)) {
      throw InputError("confusion: labels and predictions must be 0 or 1 (case '" + p.case_id + "')");
    }
    if (p.label == 1) {
      (p.pred == 1 ? c.tp : c.fn) += 1;
    } else {
      (p.pred == 1 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Rates rates(const ConfusionCounts& c) {
  return {ratio(c.tp, c.tp + c.fn), ratio(c.tn, c.tn + c.fp), ratio(c.tp + c.tn, c.total())};
}

std::vector<Prediction> per_case_vote(std::span<const Prediction> signal_preds) {
  struct Tally {
    int label = 0;
    std::size_t n = 0;
    std::size_t positive = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Tally> tallies;
  for (const auto& p : signal_preds) {
    auto [it, inserted] = tallies.emplace(p.case_id, Tally{p.label, 0, 0});
    if (inserted) order.push_back(p.case_id);
    if (it->second.label != p.label) {
      throw DataError("per_case_vote: case '" + p.case_id + "' mixes labels");
    }
    it->second.n += 1;
    if (p.pred == 1) it->second.positive += 1;
  }
  std::vector<Prediction> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    const auto& t = tallies[id];
    out.push_back({id, t.label, 2 * t.positive > t.n ? 1 : 0});
  }
  return out;
}

EvaluationReport evaluate_predictions(std::span<const Prediction> signal_preds) {
  EvaluationReport r;
  r.per_signal = confusion(signal_preds);
  const auto cases = per_case_vote(signal_preds);
  r.per_case = confusion(cases);
  r.per_signal_rates = rates(r.per_signal);
  r.per_case_rates = rates(r.per_case);
  return r;
}

std::vector<Prediction> predict_segments(std::span<const Segment> segments,
                                         const ModelParams& params, const ModelConfig& config) {
  NoGradGuard no_grad;
  Rng unused(0);
  std::vector<Prediction> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    const auto result = forward(seg.data, params, config, false, unused);
    out.push_back({seg.case_id, seg.label == CaseLabel::Abnormal ? 1 : 0, predict_label(result.logits)});
  }
  return out;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json("n/a");
}

nlohmann::json totals_json(const CostTotals& t) {
  return {{"flops", t.flops}, {"params", t.params}};
}

}  // namespace

nlohmann::json rates_json(const ConfusionCounts& c, const Rates& r) {
  return {{"sens", optional_json(r.sensitivity)},
          {"spec", optional_json(r.specificity)},
          {"acc", optional_json(r.accuracy)},
          {"counts", {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}}}};
}

nlohmann::json cost_json(const CostReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row{{"component", r.component}, {"name", r.name}, {"flops", r.flops}, {"params", r.params}};
    if (r.standard_flops) row["standard_flops"] = *r.standard_flops;
    if (r.standard_params) row["standard_params"] = *r.standard_params;
    rows.push_back(std::move(row));
  }
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& ref : report.references) {
    nlohmann::json j{{"model", ref.model}, {"flops", ref.flops}, {"params", ref.params}};
    if (!ref.footnote.empty()) j["footnote"] = ref.footnote;
    refs.push_back(std::move(j));
  }
  nlohmann::json out{{"rows", rows},
                     {"totals",
                      {{"cae_encoder", totals_json(report.cae_encoder)},
                       {"cae_decoder", totals_json(report.cae_decoder)},
                       {"classifier", totals_json(report.classifier)},
                       {"total", totals_json(report.total())}}},
                     {"references", refs}};
  if (report.raw_transformer) {
    out["raw_input_transformer"] = totals_json(*report.raw_transformer);
    const auto total = report.total().flops;
    if (total > 0) {
      out["raw_input_ratio"] =
          static_cast<double>(report.raw_transformer->flops) / static_cast<double>(total);
    }
  }
  return out;
}

nlohmann::json report_json(const EvaluationReport& report, const CostReport* cost) {
  nlohmann::json out{{"per_signal", rates_json(report.per_signal, report.per_signal_rates)},
                     {"per_case", rates_json(report.per_case, report.per_case_rates)}};
  if (cost) out["cost"] = cost_json(*cost);
  return out;
}

std::string format_rate(const std::optional<double>& value) {
  if (!value) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *value);
  return buf;
}

std::string format_metrics_table(const EvaluationReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %12s %12s %12s %8s\n", "level", "sensitivity",
                "specificity", "accuracy", "n");
  os << line;
  auto row = [&](const char* name, const ConfusionCounts& c, const Rates& r) {
    std::snprintf(line, sizeof line, "%-12s %12s %12s %12s %8llu\n", name,
                  format_rate(r.sensitivity).c_str(), format_rate(r.specificity).c_str(),
                  format_rate(r.accuracy).c_str(), static_cast<unsigned long long>(c.total()));
    os << line;
  };
  row("per-signal", report.per_signal, report.per_signal_rates);
  row("per-case", report.per_case, report.per_case_rates);
  return os.str();
}

}  // namespace cwat

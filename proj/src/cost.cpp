#include "cwat/cost.hpp"

#include <cstdio>
#include <sstream>

namespace cwat {

std::vector<CostRow> cae_cost_rows(const CaeConfig& config) {
  std::vector<CostRow> rows;
  if (config.stages.empty()) return rows;
  const std::size_t C = config.channels;
  const auto lengths = config.stage_lengths();
  const auto features = config.stage_features();
  auto conv_row = [&](std::string component, std::string name, ConvLayerSpec spec) {
    const auto cw = count_cost_conv(spec, ConvKind::Channelwise);
    const auto st = count_cost_conv(spec, ConvKind::Standard);
    rows.push_back({std::move(component), std::move(name), cw.flops, cw.params, st.flops, st.params});
  };
  auto plain_row = [&](std::string component, std::string name, std::uint64_t flops,
                       std::uint64_t params) {
    rows.push_back({std::move(component), std::move(name), flops, params, std::nullopt, std::nullopt});
  };

  for (std::size_t k = 0; k < config.stages.size(); ++k) {
    const auto& s = config.stages[k];
    const std::string p = "encoder." + std::to_string(k) + ".";
    const std::size_t M = C * features[k], N = C * features[k + 1], L = lengths[k];
    const std::uint64_t activations = static_cast<std::uint64_t>(N) * L;
    conv_row("cae_encoder", p + "conv", {s.kernel_size, M, N, L, C});
    if (features[k] != features[k + 1]) conv_row("cae_encoder", p + "shortcut", {1, M, N, L, C});
    plain_row("cae_encoder", p + "add", activations, 0);
    plain_row("cae_encoder", p + "norm", 5 * activations, 2 * L);
    plain_row("cae_encoder", p + "relu", activations, 0);
  }
  for (std::size_t k = config.stages.size(); k-- > 0;) {
    const auto& s = config.stages[k];
    const std::string p = "decoder." + std::to_string(k) + ".";
    const std::size_t M = C * features[k + 1], N = C * features[k];
    conv_row("cae_decoder", p + "conv_transpose", {s.kernel_size, M, N, lengths[k + 1], C});
    if (k > 0) {
      const std::uint64_t activations = static_cast<std::uint64_t>(N) * lengths[k];
      plain_row("cae_decoder", p + "norm", 5 * activations, 2 * lengths[k]);
      plain_row("cae_decoder", p + "relu", activations, 0);
    }
  }
  return rows;
}

std::vector<CostRow> classifier_cost_rows(const TransformerConfig& config, std::size_t n_tokens,
                                          std::size_t token_dim) {
  std::vector<CostRow> rows;
  if (config.n_layers == 0) return rows;
  const std::uint64_t n = n_tokens, D = token_dim, d = config.model_dim, dff = config.ff_dim;
  auto row = [&](std::string name, std::uint64_t flops, std::uint64_t params) {
    rows.push_back({"classifier", std::move(name), flops, params, std::nullopt, std::nullopt});
  };
  row("embed", n * D * d + n * d, D * d + d);
  const auto attn = count_cost_attention(config, n_tokens);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    row(p + "attn.projections", attn.projection_flops, attn.projection_params);
    row(p + "attn.scores", attn.score_flops, 0);
    row(p + "attn.softmax", attn.softmax_flops, 0);
    row(p + "attn.mix", attn.mix_flops, 0);
    row(p + "attn.output", attn.output_flops, attn.output_params);
    row(p + "add_norm1", n * d + 5 * n * d, 2 * d);
    row(p + "ffn", n * d * dff + n * dff + n * dff + n * dff * d + n * d, d * dff + dff + dff * d + d);
    row(p + "add_norm2", n * d + 5 * n * d, 2 * d);
  }
  row("pool", n * d, 0);
  row("head", 2 * d + 2, 2 * d + 2);
  return rows;
}

TransformerConfig raw_input_transformer(std::size_t input_length) {
  TransformerConfig t;
  t.model_dim = input_length;
  t.key_dim = input_length;
  t.ff_dim = input_length;
  t.n_layers = 1;
  return t;
}

std::vector<ReferenceFigure> reference_figures() {
  return {
      {"EEGNet", "103.6M", "19.9K", ""},
      {"EEG-ARNN", "260.0M", "69.8K", ""},
      {"Deep4Conv", "185.3M", "0.2M", ""},
      {"FusionCNN", "4.5G", "3.4G", "parameter figure printed as 3.4G in the table and 3.4M in the text"},
      {"Single-head transformer (raw input)", "11.9G", "1.3G", ""},
      {"CwA-T", "202.0M", "2.9M", ""},
  };
}

namespace {

CostTotals sum_component(const std::vector<CostRow>& rows, std::string_view component) {
  CostTotals t;
  for (const auto& r : rows) {
    if (r.component != component) continue;
    t.flops += r.flops;
    t.params += r.params;
  }
  return t;
}

}  // namespace

CostReport model_cost(const CaeConfig& cae, const TransformerConfig& transformer) {
  CostReport report;
  report.rows = cae_cost_rows(cae);
  const std::size_t token_dim = cae.stages.empty() ? cae.input_length : cae.latent_length();
  auto cls = classifier_cost_rows(transformer, cae.channels, token_dim);
  report.rows.insert(report.rows.end(), cls.begin(), cls.end());
  report.cae_encoder = sum_component(report.rows, "cae_encoder");
  report.cae_decoder = sum_component(report.rows, "cae_decoder");
  report.classifier = sum_component(report.rows, "classifier");
  const auto raw_rows =
      classifier_cost_rows(raw_input_transformer(cae.input_length), cae.channels, cae.input_length);
  report.raw_transformer = sum_component(raw_rows, "classifier");
  report.references = reference_figures();
  return report;
}

std::string format_count(std::uint64_t value) {
  const double v = static_cast<double>(value);
  char buf[32];
  if (v >= 1e9) {
    std::snprintf(buf, sizeof buf, "%.1fG", v / 1e9);
  } else if (v >= 1e6) {
    std::snprintf(buf, sizeof buf, "%.1fM", v / 1e6);
  } else if (v >= 1e3) {
    std::snprintf(buf, sizeof buf, "%.1fK", v / 1e3);
  } else {
    std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(value));
  }
  return buf;
}

std::string format_cost_table(const CostReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-34s %16s %14s %12s\n", "layer", "flops", "params",
                "cw/std");
  os << line;
  for (const auto& r : report.rows) {
    std::string ratio = "-";
    if (r.standard_flops && *r.standard_flops > 0) {
      ratio = "1/" + std::to_string(*r.standard_flops / r.flops);
    }
    std::snprintf(line, sizeof line, "%-34s %16llu %14llu %12s\n", r.name.c_str(),
                  static_cast<unsigned long long>(r.flops),
                  static_cast<unsigned long long>(r.params), ratio.c_str());
    os << line;
  }
  os << '\n';
  auto total_line = [&](const char* name, const CostTotals& t) {
    std::snprintf(line, sizeof line, "%-34s %16s %14s\n", name, format_count(t.flops).c_str(),
                  format_count(t.params).c_str());
    os << line;
  };
  total_line("cae_encoder", report.cae_encoder);
  total_line("cae_decoder (training only)", report.cae_decoder);
  total_line("classifier", report.classifier);
  total_line("total (encoder + classifier)", report.total());
  if (report.raw_transformer) {
    total_line("raw-input single-head transformer", *report.raw_transformer);
    const auto total = report.total().flops;
    if (total > 0) {
      std::snprintf(line, sizeof line, "raw-input / total flops ratio: %.1fx\n",
                    static_cast<double>(report.raw_transformer->flops) / static_cast<double>(total));
      os << line;
    }
  }
  os << "\nreference figures (as published)\n";
  std::snprintf(line, sizeof line, "%-38s %10s %10s\n", "model", "flops", "params");
  os << line;
  std::vector<std::string> notes;
  for (const auto& ref : report.references) {
    std::string name = ref.model;
    if (!ref.footnote.empty()) {
      notes.push_back(ref.footnote);
      name += " [" + std::to_string(notes.size()) + "]";
    }
    std::snprintf(line, sizeof line, "%-38s %10s %10s\n", name.c_str(), ref.flops.c_str(),
                  ref.params.c_str());
    os << line;
  }
  const auto total = report.total();
  std::snprintf(line, sizeof line, "%-38s %10s %10s\n", "CwA-T (computed)",
                format_count(total.flops).c_str(), format_count(total.params).c_str());
  os << line;
  const double gap = static_cast<double>(total.flops) / 202.0e6;
  std::snprintf(line, sizeof line, "computed / reference flops: %.2fx (reference 202.0M / 2.9M)\n", gap);
  os << line;
  for (std::size_t i = 0; i < notes.size(); ++i) os << "[" << i + 1 << "] " << notes[i] << '\n';
  return os.str();
}

}  // namespace cwat

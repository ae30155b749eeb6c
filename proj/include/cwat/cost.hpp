#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cwat/cae.hpp"
#include "cwat/classifier.hpp"
#include "cwat/model.hpp"

// Analytical forward cost of the model (1 multiply-accumulate = 1 FLOP).
namespace cwat {

struct CostRow {
  std::string component;  // "cae_encoder", "cae_decoder" or "classifier"
  std::string name;
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
  // For convolution rows: the same layer as a standard (ungrouped) conv.
  std::optional<std::uint64_t> standard_flops;
  std::optional<std::uint64_t> standard_params;
};

struct CostTotals {
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
};

struct ReferenceFigure {
  std::string model;
  std::string flops;
  std::string params;
  std::string footnote;
};

struct CostReport {
  std::vector<CostRow> rows;
  CostTotals cae_encoder;
  CostTotals cae_decoder;
  CostTotals classifier;
  // Inference path: encoder + classifier (the decoder only serves training).
  CostTotals total() const {
    return {cae_encoder.flops + classifier.flops, cae_encoder.params + classifier.params};
  }
  // Single-head transformer applied to raw C x T input, same accounting.
  std::optional<CostTotals> raw_transformer;
  std::vector<ReferenceFigure> references;
};

// Rows for the autoencoder; a config without stages yields no rows.
std::vector<CostRow> cae_cost_rows(const CaeConfig& config);
// Rows for the transformer over n_tokens tokens of token_dim values; a
// config with zero layers yields no rows.
std::vector<CostRow> classifier_cost_rows(const TransformerConfig& config, std::size_t n_tokens,
                                          std::size_t token_dim);

CostReport model_cost(const CaeConfig& cae, const TransformerConfig& transformer);

// The raw-input baseline: one layer, d = d_k = d_ff = T, tokens = channels.
TransformerConfig raw_input_transformer(std::size_t input_length);

// Published comparison figures, reproduced as printed.
std::vector<ReferenceFigure> reference_figures();

// "202.0M", "11.9G", "2.9K" style formatting.
std::string format_count(std::uint64_t value);

std::string format_cost_table(const CostReport& report);

}  // namespace cwat

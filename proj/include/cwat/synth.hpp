#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cwat/edf.hpp"
#include "cwat/preprocess.hpp"

// Synthetic labeled EEG. Normal cases carry occipital-dominant alpha;
// abnormal cases lose alpha on O1/O2 and show a 30 Hz beta burst on Fz.
namespace cwat {

struct Band {
  std::string name;
  double amplitude_uv = 0.0;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

inline std::vector<Band> default_background_bands() {
  return {{"delta", 10.0, 0.5, 4.0},
          {"theta", 6.0, 4.0, 8.0},
          {"alpha", 5.0, 8.0, 13.0},
          {"beta", 3.0, 13.0, 30.0},
          {"gamma", 1.0, 30.0, 45.0}};
}

struct SynthSpec {
  std::size_t n_cases = 20;
  std::size_t segments_per_case = 4;
  std::size_t channels = 19;
  double rate_hz = 100.0;
  double segment_seconds = 120.0;
  double noise_std_uv = 5.0;
  std::uint64_t seed = 7;
  double abnormal_fraction = 0.5;

  // Present on every channel of both classes.
  std::vector<Band> background = default_background_bands();
  // Normal class, O1/O2.
  Band occipital_alpha{"occipital_alpha", 0.0, 8.5, 12.5};
  double occipital_alpha_min_uv = 15.0;
  double occipital_alpha_max_uv = 45.0;
  // Abnormal class: alpha on O1/O2 scaled by this factor, beta burst on Fz.
  double abnormal_alpha_factor = 0.05;
  double beta_burst_uv = 20.0;
  double beta_burst_hz = 30.0;
  double burst_start_seconds = 95.0;
  double burst_end_seconds = 115.0;

  // Throws ConfigError on frequencies outside (0, rate/2), negative
  // amplitudes or an empty layout.
  void validate() const;
};

struct SynthCase {
  std::string case_id;
  std::string subject_id;
  CaseLabel label = CaseLabel::Normal;
  EegRecording recording;
};

SynthCase generate_case(const SynthSpec& spec, std::size_t index);
std::vector<SynthCase> generate(const SynthSpec& spec);

// Cases -> z-normalized segments (no minimum-duration filter).
std::vector<Segment> synth_segments(const SynthSpec& spec,
                                    const PreprocessConfig& preprocess = {});

// EDF fixture with 1-second records, +-3276.8 uV physical range and the
// label recorded as "label=<name>" in the recording field.
EdfFile to_edf(const SynthCase& c);

// Label from the EDF recording field ("label=normal"/"label=abnormal") or
// from a "normal"/"abnormal" path component; empty when neither is present.
std::optional<CaseLabel> infer_edf_label(const EdfHeader& header, const std::filesystem::path& path);

// Mean power of the DFT bins in [lo_hz, hi_hz], normalized as |X_k|^2/N^2.
double band_power(std::span<const double> samples, double rate_hz, double lo_hz, double hi_hz);

}  // namespace cwat

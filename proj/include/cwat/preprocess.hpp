#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cwat/edf.hpp"
#include "cwat/tensor.hpp"

namespace cwat {

// One model-ready example: C x T' z-normalized samples.
struct Segment {
  Tensor data;
  CaseLabel label = CaseLabel::Normal;
  std::string subject_id;
  std::string case_id;
  std::size_t segment_index = 0;

  std::size_t channels() const { return data.dim(0); }
  std::size_t length() const { return data.dim(1); }
};

struct PreprocessConfig {
  double target_rate_hz = 100.0;
  double window_seconds = 120.0;
  // Recordings shorter than this are skipped; 0 disables the filter.
  double min_duration_seconds = 900.0;
  std::size_t fir_taps = 127;
  double cutoff_fraction = 0.45;  // of the target rate
};

// Anti-aliased rational-rate decimation. The low-pass is a Hamming-windowed
// sinc (cutoff cutoff_fraction * to_hz) evaluated symmetrically around each
// output instant, so it has zero phase. Output length is
// floor(len * to_hz / from_hz). from_hz == to_hz returns the input unchanged.
std::vector<double> downsample(std::span<const double> series, double from_hz,
                               double to_hz = 100.0, std::size_t taps = 127,
                               double cutoff_fraction = 0.45);

EegRecording resample_recording(const EegRecording& rec, const PreprocessConfig& config);

// Non-overlapping windows of window_seconds; the trailing remainder is
// dropped. All channels must share one sampling rate.
std::vector<Segment> segment(const EegRecording& rec, double window_seconds = 120.0,
                             const std::string& case_id = {});

// Per-channel (x - mean) / std with population std; channels with
// std < 1e-12 become zeros.
Segment znorm(const Segment& seg);
void znorm_channel(std::span<double> channel);

// resample -> segment -> znorm. Returns an empty list when the recording is
// shorter than min_duration_seconds.
std::vector<Segment> preprocess_recording(const EegRecording& rec, const PreprocessConfig& config,
                                          const std::string& case_id);

}  // namespace cwat

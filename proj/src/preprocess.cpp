#include "cwat/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

namespace cwat {

namespace {

// Windowed-sinc low-pass sampled at arbitrary (fractional) offsets.
class SincKernel {
 public:
  SincKernel(double cutoff_cycles_per_sample, std::size_t taps)
      : fc_(cutoff_cycles_per_sample), half_(static_cast<double>(taps - 1) / 2.0) {}

  double half_width() const { return half_; }

  double operator()(double tau) const {
    if (std::abs(tau) > half_) return 0.0;
    const double x = 2.0 * fc_ * tau;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double window = 0.54 + 0.46 * std::cos(std::numbers::pi * tau / half_);
    return 2.0 * fc_ * sinc * window;
  }

 private:
  double fc_;
  double half_;
};

struct TapSet {
  long first = 0;  // input index of taps[0], relative to floor(position)
  std::vector<double> taps;
};

// Taps for an output instant at integer part 0 plus fraction `frac`,
// normalized to unit DC gain.
TapSet make_taps(const SincKernel& kernel, double frac) {
  TapSet set;
  const double hw = kernel.half_width();
  set.first = static_cast<long>(std::ceil(frac - hw));
  const long last = static_cast<long>(std::floor(frac + hw));
  set.taps.reserve(static_cast<std::size_t>(last - set.first + 1));
  for (long k = set.first; k <= last; ++k) set.taps.push_back(kernel(static_cast<double>(k) - frac));
  const double total = std::accumulate(set.taps.begin(), set.taps.end(), 0.0);
  for (auto& t : set.taps) t /= total;
  return set;
}

double apply(std::span<const double> x, long base, const TapSet& set) {
  double acc = 0.0;
  const long n = static_cast<long>(x.size());
  for (std::size_t i = 0; i < set.taps.size(); ++i) {
    const long k = base + set.first + static_cast<long>(i);
    if (k < 0 || k >= n) continue;
    acc += set.taps[i] * x[static_cast<std::size_t>(k)];
  }
  return acc;
}

// from/to as a reduced fraction when both rates are multiples of 1 mHz.
std::optional<std::pair<long, long>> rational_ratio(double from_hz, double to_hz) {
  const double a = std::round(from_hz * 1000.0), b = std::round(to_hz * 1000.0);
  if (std::abs(a - from_hz * 1000.0) > 1e-6 || std::abs(b - to_hz * 1000.0) > 1e-6) return std::nullopt;
  auto num = static_cast<long>(a), den = static_cast<long>(b);
  const long g = std::gcd(num, den);
  num /= g;
  den /= g;
  if (den > 4096) return std::nullopt;
  return std::pair{num, den};
}

}  // namespace

std::vector<double> downsample(std::span<const double> series, double from_hz, double to_hz,
                               std::size_t taps, double cutoff_fraction) {
  if (!(to_hz > 0.0) || !(from_hz > 0.0)) throw InputError("downsample: rates must be positive");
  if (from_hz < to_hz) {
    throw InputError("downsample: unsupported upsample from " + std::to_string(from_hz) +
                     " Hz to " + std::to_string(to_hz) + " Hz");
  }
  if (from_hz == to_hz) return {series.begin(), series.end()};
  if (taps < 3 || taps % 2 == 0) throw ConfigError("downsample: taps must be odd and >= 3");

  const auto out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(series.size()) * to_hz / from_hz + 1e-9));
  const SincKernel kernel(cutoff_fraction * to_hz / from_hz, taps);
  std::vector<double> out(out_len);

  if (auto ratio = rational_ratio(from_hz, to_hz)) {
    const auto [num, den] = *ratio;
    std::vector<std::optional<TapSet>> phases(static_cast<std::size_t>(den));
    for (std::size_t n = 0; n < out_len; ++n) {
      const long scaled = static_cast<long>(n) * num;
      const long base = scaled / den;
      const long phase = scaled % den;
      auto& set = phases[static_cast<std::size_t>(phase)];
      if (!set) set = make_taps(kernel, static_cast<double>(phase) / static_cast<double>(den));
      out[n] = apply(series, base, *set);
    }
  } else {
    const double step = from_hz / to_hz;
    for (std::size_t n = 0; n < out_len; ++n) {
      const double pos = static_cast<double>(n) * step;
      const double base = std::floor(pos);
      out[n] = apply(series, static_cast<long>(base), make_taps(kernel, pos - base));
    }
  }
  return out;
}

EegRecording resample_recording(const EegRecording& rec, const PreprocessConfig& config) {
  EegRecording out;
  out.subject_id = rec.subject_id;
  out.case_label = rec.case_label;
  out.clamped_samples = rec.clamped_samples;
  for (const auto& ch : rec.channels) {
    EegChannel r;
    r.label = ch.label;
    r.sampling_rate_hz = config.target_rate_hz;
    r.samples = downsample(ch.samples, ch.sampling_rate_hz, config.target_rate_hz,
                           config.fir_taps, config.cutoff_fraction);
    out.duration_seconds =
        std::max(out.duration_seconds, static_cast<double>(r.samples.size()) / r.sampling_rate_hz);
    out.channels.push_back(std::move(r));
  }
  return out;
}

std::vector<Segment> segment(const EegRecording& rec, double window_seconds,
                             const std::string& case_id) {
  if (rec.channels.empty()) throw DataError("segment: recording has no channels");
  const double rate = rec.channels.front().sampling_rate_hz;
  for (const auto& ch : rec.channels) {
    if (ch.sampling_rate_hz != rate) {
      throw DataError("segment: channel " + ch.label + " is not at the common rate");
    }
  }
  const double window_exact = window_seconds * rate;
  const auto window = static_cast<std::size_t>(std::llround(window_exact));
  if (window == 0 || std::abs(window_exact - static_cast<double>(window)) > 1e-9) {
    throw ConfigError("segment: window of " + std::to_string(window_seconds) + " s at " +
                      std::to_string(rate) + " Hz is not a whole number of samples");
  }
  std::size_t length = rec.channels.front().samples.size();
  for (const auto& ch : rec.channels) length = std::min(length, ch.samples.size());

  const std::size_t C = rec.channels.size();
  const std::size_t count = length / window;
  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<double> data(C * window);
    for (std::size_t c = 0; c < C; ++c) {
      const auto& src = rec.channels[c].samples;
      std::copy_n(src.begin() + static_cast<long>(s * window), window,
                  data.begin() + static_cast<long>(c * window));
    }
    Segment seg;
    seg.data = Tensor({C, window}, std::move(data));
    seg.label = rec.case_label.value_or(CaseLabel::Normal);
    seg.subject_id = rec.subject_id;
    seg.case_id = case_id;
    seg.segment_index = s;
    out.push_back(std::move(seg));
  }
  return out;
}

void znorm_channel(std::span<double> channel) {
  if (channel.empty()) return;
  const double n = static_cast<double>(channel.size());
  double mean = 0.0;
  for (double v : channel) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : channel) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd < 1e-12) {
    std::fill(channel.begin(), channel.end(), 0.0);
    return;
  }
  for (auto& v : channel) v = (v - mean) / sd;
}

Segment znorm(const Segment& seg) {
  Segment out = seg;
  out.data = seg.data.detach();
  const std::size_t L = out.length();
  auto values = out.data.mutable_data();
  for (std::size_t c = 0; c < out.channels(); ++c) znorm_channel(values.subspan(c * L, L));
  return out;
}

std::vector<Segment> preprocess_recording(const EegRecording& rec, const PreprocessConfig& config,
                                          const std::string& case_id) {
  if (config.min_duration_seconds > 0.0 && rec.duration_seconds < config.min_duration_seconds) {
    return {};
  }
  auto segments = segment(resample_recording(rec, config), config.window_seconds, case_id);
  for (auto& s : segments) s = znorm(s);
  return segments;
}

}  // namespace cwat

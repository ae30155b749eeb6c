#include "cwat/synth.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "cwat/error.hpp"
#include "cwat/random.hpp"

namespace cwat {

void SynthSpec::validate() const {
  if (n_cases == 0 || segments_per_case == 0) throw ConfigError("synth: need at least one case and segment");
  if (channels == 0 || channels > kMontage10_20.size()) {
    throw ConfigError("synth: channels must lie in [1, 19]");
  }
  if (!(rate_hz > 0.0) || !(segment_seconds > 0.0)) throw ConfigError("synth: rate and duration must be > 0");
  if (noise_std_uv < 0.0) throw ConfigError("synth: noise_std_uv must be >= 0");
  if (abnormal_fraction < 0.0 || abnormal_fraction > 1.0) {
    throw ConfigError("synth: abnormal_fraction must lie in [0, 1]");
  }
  const double nyquist = rate_hz / 2.0;
  auto check_band = [&](const Band& b) {
    if (b.amplitude_uv < 0.0) throw ConfigError("synth: band '" + b.name + "' has a negative amplitude");
    if (!(b.lo_hz > 0.0) || !(b.hi_hz < nyquist) || b.lo_hz > b.hi_hz) {
      throw ConfigError("synth: band '" + b.name + "' must lie within (0, rate/2)");
    }
  };
  for (const auto& b : background) check_band(b);
  check_band(occipital_alpha);
  if (occipital_alpha_min_uv < 0.0 || occipital_alpha_max_uv < occipital_alpha_min_uv) {
    throw ConfigError("synth: occipital alpha amplitude range is invalid");
  }
  if (abnormal_alpha_factor < 0.0 || beta_burst_uv < 0.0) throw ConfigError("synth: amplitudes must be >= 0");
  if (!(beta_burst_hz > 0.0 && beta_burst_hz < nyquist)) {
    throw ConfigError("synth: beta burst frequency must lie within (0, rate/2)");
  }
  if (burst_start_seconds < 0.0 || burst_end_seconds > segment_seconds ||
      burst_end_seconds <= burst_start_seconds) {
    throw ConfigError("synth: beta burst must lie inside the segment");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Adds amplitude * sin(2 pi f t + phase) over [begin, end) via a rotating
// phasor, optionally shaped by a Hann envelope over the same span.
void add_tone(std::vector<double>& out, std::size_t begin, std::size_t end, double rate_hz,
              double freq_hz, double amplitude, double phase, bool hann = false) {
  const double w = 2.0 * std::numbers::pi * freq_hz / rate_hz;
  std::complex<double> z = std::polar(1.0, phase);
  const std::complex<double> step = std::polar(1.0, w);
  const double span = static_cast<double>(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    double a = amplitude;
    if (hann) a *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i - begin) / span);
    out[i] += a * z.imag();
    z *= step;
    if (((i - begin) & 1023) == 1023) z /= std::abs(z);
  }
}

std::vector<CaseLabel> case_labels(const SynthSpec& spec) {
  const auto n_abnormal =
      static_cast<std::size_t>(std::llround(spec.abnormal_fraction * static_cast<double>(spec.n_cases)));
  std::vector<std::size_t> order(spec.n_cases);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(splitmix64(spec.seed));
  shuffle(order.begin(), order.end(), rng);
  std::vector<CaseLabel> labels(spec.n_cases, CaseLabel::Normal);
  for (std::size_t i = 0; i < n_abnormal; ++i) labels[order[i]] = CaseLabel::Abnormal;
  return labels;
}

std::string numbered(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, index);
  return buf;
}

}  // namespace

SynthCase generate_case(const SynthSpec& spec, std::size_t index) {
  spec.validate();
  if (index >= spec.n_cases) throw ConfigError("synth: case index out of range");
  SynthCase c;
  c.case_id = numbered("case", index);
  c.subject_id = numbered("subj", index);
  c.label = case_labels(spec)[index];
  const bool abnormal = c.label == CaseLabel::Abnormal;

  const auto seg_len = static_cast<std::size_t>(std::llround(spec.segment_seconds * spec.rate_hz));
  const std::size_t total = seg_len * spec.segments_per_case;
  Rng rng(splitmix64(spec.seed ^ splitmix64(index + 1)));

  c.recording.subject_id = c.subject_id;
  c.recording.case_label = c.label;
  c.recording.duration_seconds = static_cast<double>(total) / spec.rate_hz;
  const auto burst_begin = static_cast<std::size_t>(spec.burst_start_seconds * spec.rate_hz);
  const auto burst_end = static_cast<std::size_t>(spec.burst_end_seconds * spec.rate_hz);

  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    EegChannel channel;
    channel.label = std::string(kMontage10_20[ch]);
    channel.sampling_rate_hz = spec.rate_hz;
    channel.samples.assign(total, 0.0);
    const bool occipital = channel.label == "O1" || channel.label == "O2";
    const bool frontal_midline = channel.label == "Fz";
    for (std::size_t w = 0; w < spec.segments_per_case; ++w) {
      const std::size_t b = w * seg_len, e = b + seg_len;
      for (const auto& band : spec.background) {
        double amp = band.amplitude_uv * uniform(rng, 0.7, 1.3);
        if (abnormal && occipital && band.name == "alpha") amp *= spec.abnormal_alpha_factor;
        add_tone(channel.samples, b, e, spec.rate_hz, uniform(rng, band.lo_hz, band.hi_hz), amp,
                 uniform(rng, 0.0, 2.0 * std::numbers::pi));
      }
      if (occipital) {
        double amp = uniform(rng, spec.occipital_alpha_min_uv, spec.occipital_alpha_max_uv);
        if (abnormal) amp *= spec.abnormal_alpha_factor;
        add_tone(channel.samples, b, e, spec.rate_hz,
                 uniform(rng, spec.occipital_alpha.lo_hz, spec.occipital_alpha.hi_hz), amp,
                 uniform(rng, 0.0, 2.0 * std::numbers::pi));
      }
      if (abnormal && frontal_midline) {
        add_tone(channel.samples, b + burst_begin, b + burst_end, spec.rate_hz, spec.beta_burst_hz,
                 spec.beta_burst_uv, uniform(rng, 0.0, 2.0 * std::numbers::pi), true);
      }
    }
    if (spec.noise_std_uv > 0.0) {
      for (auto& v : channel.samples) v += normal(rng, 0.0, spec.noise_std_uv);
    }
    c.recording.channels.push_back(std::move(channel));
  }
  return c;
}

std::vector<SynthCase> generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<SynthCase> out;
  out.reserve(spec.n_cases);
  for (std::size_t i = 0; i < spec.n_cases; ++i) out.push_back(generate_case(spec, i));
  return out;
}

std::vector<Segment> synth_segments(const SynthSpec& spec, const PreprocessConfig& preprocess) {
  PreprocessConfig pp = preprocess;
  pp.min_duration_seconds = 0.0;
  std::vector<Segment> out;
  for (std::size_t i = 0; i < spec.n_cases; ++i) {
    const auto c = generate_case(spec, i);
    auto segs = preprocess_recording(c.recording, pp, c.case_id);
    for (auto& s : segs) out.push_back(std::move(s));
  }
  return out;
}

EdfFile to_edf(const SynthCase& c) {
  EdfFile f;
  const auto& rec = c.recording;
  if (rec.channels.empty()) throw InputError("to_edf: recording has no channels");
  const double rate = rec.channels.front().sampling_rate_hz;
  const double spr_real = rate;
  const auto spr = static_cast<std::size_t>(std::llround(spr_real));
  if (std::abs(spr_real - static_cast<double>(spr)) > 1e-9 || spr == 0) {
    throw InputError("to_edf: sampling rate must be a whole number of Hz");
  }
  const std::size_t n = rec.channels.front().samples.size();
  if (n % spr != 0) throw InputError("to_edf: recording is not a whole number of seconds");
  f.header.patient_id = c.subject_id;
  f.header.recording_id = c.case_id + " label=" + std::string(label_name(c.label));
  f.header.n_signals = rec.channels.size();
  f.header.header_bytes = 256 * (1 + rec.channels.size());
  f.header.n_records = static_cast<long>(n / spr);
  f.header.record_duration = 1.0;
  for (const auto& ch : rec.channels) {
    SignalHeader sh;
    sh.label = "EEG " + ch.label + "-REF";
    sh.transducer = "synthetic";
    sh.samples_per_record = spr;
    f.samples.push_back(to_digital(ch.samples, sh));
    f.signals.push_back(std::move(sh));
  }
  return f;
}

std::optional<CaseLabel> infer_edf_label(const EdfHeader& header, const std::filesystem::path& path) {
  const auto pos = header.recording_id.find("label=");
  if (pos != std::string::npos) {
    auto rest = header.recording_id.substr(pos + 6);
    rest = rest.substr(0, rest.find(' '));
    return parse_case_label(rest);
  }
  for (const auto& part : path.parent_path()) {
    const auto s = part.string();
    if (s == "normal") return CaseLabel::Normal;
    if (s == "abnormal") return CaseLabel::Abnormal;
  }
  return std::nullopt;
}

double band_power(std::span<const double> samples, double rate_hz, double lo_hz, double hi_hz) {
  const std::size_t n = samples.size();
  if (n == 0) return 0.0;
  const double df = rate_hz / static_cast<double>(n);
  const auto k0 = static_cast<std::size_t>(std::ceil(lo_hz / df));
  const auto k1 = std::min(static_cast<std::size_t>(std::floor(hi_hz / df)), n / 2);
  if (k1 < k0) return 0.0;
  double total = 0.0;
  for (std::size_t k = k0; k <= k1; ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    std::complex<double> z(1.0, 0.0);
    const std::complex<double> step = std::polar(1.0, -w);
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      acc += samples[i] * z;
      z *= step;
    }
    total += std::norm(acc) / (static_cast<double>(n) * static_cast<double>(n));
  }
  return total / static_cast<double>(k1 - k0 + 1);
}

}  // namespace cwat

#include "cwat/edf.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

namespace cwat {

namespace {

using namespace edf_layout;

std::string_view field_at(std::span<const std::uint8_t> bytes, std::size_t offset,
                          std::size_t width) {
  return {reinterpret_cast<const char*>(bytes.data()) + offset, width};
}

std::string trim_right(std::string_view s) {
  auto end = s.find_last_not_of(" \0", std::string_view::npos, 2);
  return end == std::string_view::npos ? std::string() : std::string(s.substr(0, end + 1));
}

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(' ');
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \0", std::string_view::npos, 2);
  return s.substr(begin, end - begin + 1);
}

long parse_integer(std::string_view raw, std::size_t offset, const char* what) {
  const auto text = trim(raw);
  long value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(offset, std::string("non-numeric ") + what + " field '" +
                                 std::string(text) + "'");
  }
  return value;
}

double parse_decimal(std::string_view raw, std::size_t offset, const char* what) {
  const auto text = trim(raw);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError(offset, std::string("non-numeric ") + what + " field '" +
                                 std::string(text) + "'");
  }
  return value;
}

std::string format_integer(long value, std::size_t width, const char* what) {
  auto text = std::to_string(value);
  if (text.size() > width) throw ConfigError(std::string("EDF field ") + what + " overflows");
  return text;
}

std::string format_decimal(double value, std::size_t width, const char* what) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string text(buf.data(), ptr);
  if (text.size() <= width) return text;
  for (int precision = static_cast<int>(width); precision >= 0; --precision) {
    auto [p, e] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                std::chars_format::fixed, precision);
    if (e == std::errc() && static_cast<std::size_t>(p - buf.data()) <= width) {
      return std::string(buf.data(), p);
    }
  }
  throw ConfigError(std::string("EDF field ") + what + " cannot be represented in " +
                    std::to_string(width) + " characters");
}

void put_field(std::vector<std::uint8_t>& out, std::string_view text, std::size_t width) {
  if (text.size() > width) {
    throw ConfigError("EDF text field '" + std::string(text) + "' exceeds " +
                      std::to_string(width) + " bytes");
  }
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), width - text.size(), ' ');
}

bool is_annotation(std::string_view label) {
  return trim(label).starts_with("EDF Annotations");
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string missing_message(const std::vector<std::string>& missing) {
  std::string msg = "missing montage channels:";
  for (const auto& m : missing) msg += " " + m;
  return msg;
}

}  // namespace

std::string_view label_name(CaseLabel label) {
  return label == CaseLabel::Abnormal ? "abnormal" : "normal";
}

CaseLabel parse_case_label(std::string_view text) {
  if (text == "normal" || text == "0") return CaseLabel::Normal;
  if (text == "abnormal" || text == "1") return CaseLabel::Abnormal;
  throw DataError("unknown case label '" + std::string(text) + "'");
}

EdfFile parse_edf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMainHeaderBytes) throw ParseError(bytes.size(), "truncated header");

  EdfFile file;
  auto& h = file.header;
  h.version = trim_right(field_at(bytes, 0, 8));
  h.patient_id = trim_right(field_at(bytes, 8, 80));
  h.recording_id = trim_right(field_at(bytes, 88, 80));
  h.start_date = trim_right(field_at(bytes, 168, 8));
  h.start_time = trim_right(field_at(bytes, 176, 8));
  const long header_bytes = parse_integer(field_at(bytes, 184, 8), 184, "header_bytes");
  h.reserved = trim_right(field_at(bytes, 192, 44));
  h.n_records = parse_integer(field_at(bytes, kRecordsOffset, 8), kRecordsOffset, "n_records");
  h.record_duration =
      parse_decimal(field_at(bytes, kDurationOffset, 8), kDurationOffset, "record_duration");
  const long n_signals = parse_integer(field_at(bytes, kSignalsOffset, 4), kSignalsOffset, "n_signals");

  if (n_signals < 1) throw ParseError(kSignalsOffset, "file declares no signals");
  h.n_signals = static_cast<std::size_t>(n_signals);
  if (header_bytes < 0 ||
      static_cast<std::size_t>(header_bytes) != kMainHeaderBytes + kSignalHeaderBytes * h.n_signals) {
    throw ParseError(kHeaderBytesOffset,
                     "header_bytes " + std::to_string(header_bytes) + " inconsistent with " +
                         std::to_string(n_signals) + " signals");
  }
  h.header_bytes = static_cast<std::size_t>(header_bytes);
  if (h.n_records < -1) throw ParseError(kRecordsOffset, "negative record count");
  if (h.n_records >= 0 && !(h.record_duration > 0.0)) {
    throw ParseError(kDurationOffset, "record duration must be positive");
  }
  if (bytes.size() < h.header_bytes) throw ParseError(bytes.size(), "truncated signal headers");

  const std::size_t ns = h.n_signals;
  std::array<std::size_t, kSignalFieldWidths.size()> field_base{};
  {
    std::size_t base = kMainHeaderBytes;
    for (std::size_t f = 0; f < kSignalFieldWidths.size(); ++f) {
      field_base[f] = base;
      base += kSignalFieldWidths[f] * ns;
    }
  }
  auto sig_field = [&](std::size_t f, std::size_t i) {
    const std::size_t off = field_base[f] + i * kSignalFieldWidths[f];
    return std::pair{field_at(bytes, off, kSignalFieldWidths[f]), off};
  };

  file.signals.resize(ns);
  std::size_t record_samples = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    auto& s = file.signals[i];
    s.label = trim_right(sig_field(0, i).first);
    s.transducer = trim_right(sig_field(1, i).first);
    s.physical_dimension = trim_right(sig_field(2, i).first);
    auto [pmin, pmin_off] = sig_field(3, i);
    auto [pmax, pmax_off] = sig_field(4, i);
    auto [dmin, dmin_off] = sig_field(5, i);
    auto [dmax, dmax_off] = sig_field(6, i);
    s.physical_min = parse_decimal(pmin, pmin_off, "physical_min");
    s.physical_max = parse_decimal(pmax, pmax_off, "physical_max");
    s.digital_min = parse_integer(dmin, dmin_off, "digital_min");
    s.digital_max = parse_integer(dmax, dmax_off, "digital_max");
    s.prefiltering = trim_right(sig_field(7, i).first);
    auto [spr, spr_off] = sig_field(8, i);
    const long samples = parse_integer(spr, spr_off, "samples_per_record");
    s.reserved = trim_right(sig_field(9, i).first);
    if (s.digital_min >= s.digital_max) {
      throw ParseError(dmin_off, "digital_min >= digital_max for signal '" + s.label + "'");
    }
    if (s.digital_min < -32768 || s.digital_max > 32767) {
      throw ParseError(dmin_off, "digital range exceeds 16 bits for signal '" + s.label + "'");
    }
    if (s.physical_min == s.physical_max) {
      throw ParseError(pmin_off, "physical_min == physical_max for signal '" + s.label + "'");
    }
    if (samples < 1) throw ParseError(spr_off, "samples_per_record must be >= 1");
    s.samples_per_record = static_cast<std::size_t>(samples);
    record_samples += s.samples_per_record;
  }

  const std::size_t record_bytes = record_samples * 2;
  const std::size_t data_bytes = bytes.size() - h.header_bytes;
  std::size_t n_records = 0;
  if (h.n_records < 0) {
    n_records = data_bytes / record_bytes;
  } else {
    n_records = static_cast<std::size_t>(h.n_records);
    if (data_bytes < n_records * record_bytes) {
      const std::size_t complete = data_bytes / record_bytes;
      throw ParseError(h.header_bytes + complete * record_bytes,
                       "truncated data record " + std::to_string(complete) + " of " +
                           std::to_string(n_records));
    }
  }

  file.samples.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    file.samples[i].reserve(n_records * file.signals[i].samples_per_record);
  }
  const std::uint8_t* p = bytes.data() + h.header_bytes;
  for (std::size_t r = 0; r < n_records; ++r) {
    for (std::size_t i = 0; i < ns; ++i) {
      auto& dst = file.samples[i];
      for (std::size_t k = 0; k < file.signals[i].samples_per_record; ++k, p += 2) {
        const auto u = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        dst.push_back(static_cast<std::int16_t>(u));
      }
    }
  }
  return file;
}

EdfFile read_edf_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open EDF file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_edf(bytes);
}

std::vector<std::uint8_t> write_edf(const EdfFile& file) {
  const auto& h = file.header;
  const std::size_t ns = file.signals.size();
  if (ns == 0) throw ConfigError("write_edf: no signals");
  if (file.samples.size() != ns) throw ConfigError("write_edf: samples/signals count differ");

  std::size_t n_records = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    const auto spr = file.signals[i].samples_per_record;
    if (spr == 0 || file.samples[i].size() % spr != 0) {
      throw ConfigError("write_edf: signal '" + file.signals[i].label +
                        "' does not hold whole records");
    }
    const auto records = file.samples[i].size() / spr;
    if (i == 0) n_records = records;
    if (records != n_records) throw ConfigError("write_edf: signals disagree on record count");
  }

  std::vector<std::uint8_t> out;
  out.reserve(kMainHeaderBytes * (ns + 1));
  put_field(out, h.version, 8);
  put_field(out, h.patient_id, 80);
  put_field(out, h.recording_id, 80);
  put_field(out, h.start_date, 8);
  put_field(out, h.start_time, 8);
  put_field(out, format_integer(static_cast<long>(kMainHeaderBytes * (ns + 1)), 8, "header_bytes"), 8);
  put_field(out, h.reserved, 44);
  put_field(out, format_integer(static_cast<long>(n_records), 8, "n_records"), 8);
  put_field(out, format_decimal(h.record_duration, 8, "record_duration"), 8);
  put_field(out, format_integer(static_cast<long>(ns), 4, "n_signals"), 4);

  for (const auto& s : file.signals) put_field(out, s.label, 16);
  for (const auto& s : file.signals) put_field(out, s.transducer, 80);
  for (const auto& s : file.signals) put_field(out, s.physical_dimension, 8);
  for (const auto& s : file.signals) put_field(out, format_decimal(s.physical_min, 8, "physical_min"), 8);
  for (const auto& s : file.signals) put_field(out, format_decimal(s.physical_max, 8, "physical_max"), 8);
  for (const auto& s : file.signals) put_field(out, format_integer(s.digital_min, 8, "digital_min"), 8);
  for (const auto& s : file.signals) put_field(out, format_integer(s.digital_max, 8, "digital_max"), 8);
  for (const auto& s : file.signals) put_field(out, s.prefiltering, 80);
  for (const auto& s : file.signals)
    put_field(out, format_integer(static_cast<long>(s.samples_per_record), 8, "samples_per_record"), 8);
  for (const auto& s : file.signals) put_field(out, s.reserved, 32);

  for (std::size_t r = 0; r < n_records; ++r) {
    for (std::size_t i = 0; i < ns; ++i) {
      const auto spr = file.signals[i].samples_per_record;
      for (std::size_t k = 0; k < spr; ++k) {
        const auto u = static_cast<std::uint16_t>(file.samples[i][r * spr + k]);
        out.push_back(static_cast<std::uint8_t>(u & 0xff));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
      }
    }
  }
  return out;
}

void write_edf_file(const std::filesystem::path& path, const EdfFile& file) {
  const auto bytes = write_edf(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write EDF file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> to_physical(std::span<const std::int16_t> digital, const SignalHeader& sh,
                                std::size_t* clamped) {
  const double span = static_cast<double>(sh.digital_max - sh.digital_min);
  std::vector<double> out(digital.size());
  for (std::size_t i = 0; i < digital.size(); ++i) {
    long d = digital[i];
    if (d < sh.digital_min || d > sh.digital_max) {
      d = std::clamp(d, sh.digital_min, sh.digital_max);
      if (clamped) ++*clamped;
    }
    // lerp is exact at both endpoints and monotone in t.
    const double t = static_cast<double>(d - sh.digital_min) / span;
    out[i] = std::lerp(sh.physical_min, sh.physical_max, t);
  }
  return out;
}

std::vector<std::int16_t> to_digital(std::span<const double> physical, const SignalHeader& sh) {
  const double dspan = static_cast<double>(sh.digital_max - sh.digital_min);
  const double pspan = sh.physical_max - sh.physical_min;
  std::vector<std::int16_t> out(physical.size());
  for (std::size_t i = 0; i < physical.size(); ++i) {
    const double code = static_cast<double>(sh.digital_min) +
                        (physical[i] - sh.physical_min) / pspan * dspan;
    const long rounded = std::lround(std::clamp(code, static_cast<double>(sh.digital_min),
                                                static_cast<double>(sh.digital_max)));
    out[i] = static_cast<std::int16_t>(rounded);
  }
  return out;
}

EegRecording to_recording(const EdfFile& file, std::string subject_id,
                          std::optional<CaseLabel> label) {
  EegRecording rec;
  rec.subject_id = std::move(subject_id);
  rec.case_label = label;
  for (std::size_t i = 0; i < file.signals.size(); ++i) {
    const auto& sh = file.signals[i];
    if (is_annotation(sh.label)) continue;
    EegChannel ch;
    ch.label = sh.label;
    ch.sampling_rate_hz = sh.sampling_rate(file.header.record_duration);
    ch.samples = to_physical(file.samples[i], sh, &rec.clamped_samples);
    rec.duration_seconds = std::max(rec.duration_seconds,
                                    static_cast<double>(ch.samples.size()) / ch.sampling_rate_hz);
    rec.channels.push_back(std::move(ch));
  }
  return rec;
}

std::string normalize_channel_label(std::string_view label) {
  std::string s = upper(trim(label));
  if (s.starts_with("EEG ")) s.erase(0, 4);
  for (std::string_view suffix : {"-REF", "-LE"}) {
    if (s.ends_with(suffix)) {
      s.erase(s.size() - suffix.size());
      break;
    }
  }
  // Old 10-20 temporal/parietal names.
  if (s == "T3") return "T7";
  if (s == "T4") return "T8";
  if (s == "T5") return "P7";
  if (s == "T6") return "P8";
  return s;
}

MissingChannelError::MissingChannelError(std::vector<std::string> missing)
    : DataError(missing_message(missing)), missing_(std::move(missing)) {}

EegRecording select_montage(const EegRecording& rec, std::span<const std::string_view> wanted) {
  std::vector<std::string> normalized;
  normalized.reserve(rec.channels.size());
  for (const auto& ch : rec.channels) normalized.push_back(normalize_channel_label(ch.label));

  EegRecording out;
  out.subject_id = rec.subject_id;
  out.case_label = rec.case_label;
  out.clamped_samples = rec.clamped_samples;
  std::vector<std::string> missing;
  for (auto want : wanted) {
    const auto key = normalize_channel_label(want);
    auto it = std::find(normalized.begin(), normalized.end(), key);
    if (it == normalized.end()) {
      missing.emplace_back(want);
      continue;
    }
    auto ch = rec.channels[static_cast<std::size_t>(it - normalized.begin())];
    ch.label = std::string(want);
    out.channels.push_back(std::move(ch));
  }
  if (!missing.empty()) throw MissingChannelError(std::move(missing));

  for (const auto& ch : out.channels) {
    if (ch.sampling_rate_hz != out.channels.front().sampling_rate_hz) {
      throw DataError("montage channels have differing sampling rates (" + ch.label + " at " +
                      std::to_string(ch.sampling_rate_hz) + " Hz vs " +
                      std::to_string(out.channels.front().sampling_rate_hz) + " Hz)");
    }
    out.duration_seconds =
        std::max(out.duration_seconds, static_cast<double>(ch.samples.size()) / ch.sampling_rate_hz);
  }
  return out;
}

}  // namespace cwat

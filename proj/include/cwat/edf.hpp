#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cwat/error.hpp"

namespace cwat {

enum class CaseLabel : std::uint8_t { Normal = 0, Abnormal = 1 };

std::string_view label_name(CaseLabel label);
CaseLabel parse_case_label(std::string_view text);

// Main header, 256 bytes of space-padded ASCII. Text fields are stored with
// trailing padding removed.
struct EdfHeader {
  std::string version = "0";
  std::string patient_id;
  std::string recording_id;
  std::string start_date = "01.01.00";
  std::string start_time = "00.00.00";
  std::size_t header_bytes = 256;
  std::string reserved;
  long n_records = 0;  // -1 when unknown
  double record_duration = 1.0;
  std::size_t n_signals = 0;
};

struct SignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension = "uV";
  double physical_min = -3276.8;
  double physical_max = 3276.7;
  long digital_min = -32768;
  long digital_max = 32767;
  std::string prefiltering;
  std::size_t samples_per_record = 1;
  std::string reserved;

  double sampling_rate(double record_duration) const {
    return static_cast<double>(samples_per_record) / record_duration;
  }
};

struct EdfFile {
  EdfHeader header;
  std::vector<SignalHeader> signals;
  // Digital samples per signal, records concatenated in order.
  std::vector<std::vector<std::int16_t>> samples;
};

// Byte layout of the fixed-width fields, used for error offsets.
namespace edf_layout {
inline constexpr std::size_t kMainHeaderBytes = 256;
inline constexpr std::size_t kSignalHeaderBytes = 256;
inline constexpr std::size_t kHeaderBytesOffset = 184;
inline constexpr std::size_t kRecordsOffset = 236;
inline constexpr std::size_t kDurationOffset = 244;
inline constexpr std::size_t kSignalsOffset = 252;
// label, transducer, dimension, pmin, pmax, dmin, dmax, prefilter, samples, reserved
inline constexpr std::array<std::size_t, 10> kSignalFieldWidths{16, 80, 8, 8, 8,
                                                                 8,  8,  80, 8, 32};
}  // namespace edf_layout

// Decodes a complete EDF file. Throws ParseError with the offending byte
// offset on any structural problem.
EdfFile parse_edf(std::span<const std::uint8_t> bytes);
EdfFile read_edf_file(const std::filesystem::path& path);

// Fixture-grade writer. Numeric fields use the shortest text that round-trips
// and fits the field width.
std::vector<std::uint8_t> write_edf(const EdfFile& file);
void write_edf_file(const std::filesystem::path& path, const EdfFile& file);

// Affine digital -> physical calibration. Out-of-range samples are clamped to
// [digital_min, digital_max]; `clamped` (if given) is incremented per clamp.
std::vector<double> to_physical(std::span<const std::int16_t> digital, const SignalHeader& sh,
                                std::size_t* clamped = nullptr);
// Inverse used by fixture writers: rounds to the nearest digital code.
std::vector<std::int16_t> to_digital(std::span<const double> physical, const SignalHeader& sh);

struct EegChannel {
  std::string label;
  double sampling_rate_hz = 0.0;
  std::vector<double> samples;
};

struct EegRecording {
  std::vector<EegChannel> channels;
  double duration_seconds = 0.0;
  std::string subject_id;
  std::optional<CaseLabel> case_label;
  std::size_t clamped_samples = 0;
};

// Converts every non-annotation signal to physical units.
EegRecording to_recording(const EdfFile& file, std::string subject_id = {},
                          std::optional<CaseLabel> label = std::nullopt);

inline constexpr std::array<std::string_view, 19> kMontage10_20{
    "Fp1", "Fp2", "F3", "F4", "F7", "F8", "C3", "C4", "T7", "T8",
    "P3",  "P4",  "P7", "P8", "O1", "O2", "Fz", "Cz", "Pz"};

// Uppercases, strips an "EEG " prefix and "-REF"/"-LE" suffixes, and maps the
// older T3/T4/T5/T6 names onto T7/T8/P7/P8.
std::string normalize_channel_label(std::string_view label);

class MissingChannelError : public DataError {
 public:
  explicit MissingChannelError(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

// Returns the wanted channels in the wanted order. All selected channels
// must share one sampling rate.
EegRecording select_montage(const EegRecording& rec,
                            std::span<const std::string_view> wanted = kMontage10_20);

}  // namespace cwat

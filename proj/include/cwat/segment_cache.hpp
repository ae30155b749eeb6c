#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cwat/preprocess.hpp"

namespace cwat {

// On-disk segment: "CWAT", u16 version, u16 C, u32 T', u8 label,
// u16-prefixed subject_id, u16-prefixed case_id, then C*T' LE float64.
inline constexpr std::uint16_t kSegmentFormatVersion = 1;

std::vector<std::uint8_t> encode_segment(const Segment& seg);
Segment decode_segment(std::span<const std::uint8_t> bytes);
void write_segment_file(const std::filesystem::path& path, const Segment& seg);
Segment read_segment_file(const std::filesystem::path& path);

// Manifest: one tab-separated line per segment, "path case_id subject_id
// label"; '#' starts a comment line. Relative paths resolve against the
// manifest's directory.
struct ManifestEntry {
  std::string path;
  std::string case_id;
  std::string subject_id;
  CaseLabel label = CaseLabel::Normal;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

// Loads every segment listed; segment_index counts up within each case in
// manifest order.
std::vector<Segment> load_manifest_segments(const std::filesystem::path& manifest_path);

// Writes segments under dir/segments/ and returns manifest entries for them.
std::vector<ManifestEntry> write_segment_cache(const std::filesystem::path& dir,
                                               std::span<const Segment> segments);

}  // namespace cwat

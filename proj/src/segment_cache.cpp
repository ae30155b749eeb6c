#include "cwat/segment_cache.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "cwat/detail/binary_io.hpp"

namespace cwat {

namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace detail

std::vector<std::uint8_t> encode_segment(const Segment& seg) {
  if (seg.data.rank() != 2) throw DimensionError("segment data must be C x T'");
  if (seg.channels() > 0xffff) throw ConfigError("segment has too many channels for u16");
  detail::ByteWriter w;
  w.bytes("CWAT");
  w.uint<std::uint16_t>(kSegmentFormatVersion);
  w.uint<std::uint16_t>(static_cast<std::uint16_t>(seg.channels()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(seg.length()));
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(seg.label));
  w.text16(seg.subject_id);
  w.text16(seg.case_id);
  w.f64s(seg.data.data());
  return std::move(w.buffer());
}

Segment decode_segment(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "segment");
  if (r.bytes(4) != "CWAT") throw DataError("segment: bad magic");
  const auto version = r.uint<std::uint16_t>();
  if (version != kSegmentFormatVersion) {
    throw DataError("segment: unsupported version " + std::to_string(version));
  }
  const std::size_t C = r.uint<std::uint16_t>();
  const std::size_t T = r.uint<std::uint32_t>();
  const auto label = r.uint<std::uint8_t>();
  if (label > 1) throw DataError("segment: label byte " + std::to_string(label));
  Segment seg;
  seg.label = static_cast<CaseLabel>(label);
  seg.subject_id = r.text16();
  seg.case_id = r.text16();
  std::vector<double> data(C * T);
  for (auto& v : data) v = r.f64();
  seg.data = Tensor({C, T}, std::move(data));
  return seg;
}

void write_segment_file(const std::filesystem::path& path, const Segment& seg) {
  detail::write_file_bytes(path, encode_segment(seg));
}

Segment read_segment_file(const std::filesystem::path& path) {
  return decode_segment(detail::read_file_bytes(path));
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 4) {
      throw DataError("manifest " + path.string() + ":" + std::to_string(line_no) +
                      ": expected 4 tab-separated columns");
    }
    entries.push_back({cols[0], cols[1], cols[2], parse_case_label(cols[3])});
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ostringstream out;
  out << "# path\tcase_id\tsubject_id\tlabel\n";
  for (const auto& e : entries) {
    out << e.path << '\t' << e.case_id << '\t' << e.subject_id << '\t' << label_name(e.label) << '\n';
  }
  const auto text = out.str();
  detail::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<Segment> load_manifest_segments(const std::filesystem::path& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  std::map<std::string, std::size_t> next_index;
  std::vector<Segment> segments;
  segments.reserve(entries.size());
  for (const auto& e : entries) {
    std::filesystem::path p(e.path);
    if (p.is_relative()) p = base / p;
    auto seg = read_segment_file(p);
    seg.case_id = e.case_id;
    seg.subject_id = e.subject_id;
    seg.label = e.label;
    seg.segment_index = next_index[e.case_id]++;
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<ManifestEntry> write_segment_cache(const std::filesystem::path& dir,
                                               std::span<const Segment> segments) {
  std::vector<ManifestEntry> entries;
  entries.reserve(segments.size());
  for (const auto& seg : segments) {
    const std::string rel = "segments/" + seg.case_id + "_" + std::to_string(seg.segment_index) + ".seg";
    write_segment_file(dir / rel, seg);
    entries.push_back({rel, seg.case_id, seg.subject_id, seg.label});
  }
  return entries;
}

}  // namespace cwat

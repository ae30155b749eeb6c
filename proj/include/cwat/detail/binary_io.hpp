#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cwat/error.hpp"

// Little-endian helpers shared by the segment cache and checkpoint formats.
namespace cwat::detail {

class ByteWriter {
 public:
  void bytes(std::string_view raw) { out_.insert(out_.end(), raw.begin(), raw.end()); }

  template <typename T>
  void uint(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
  }

  void f64(double value) { uint(std::bit_cast<std::uint64_t>(value)); }

  void f64s(std::span<const double> values) {
    for (double v : values) f64(v);
  }

  // u16 length prefix.
  void text16(std::string_view s) {
    if (s.size() > 0xffff) throw ConfigError("text field too long for u16 length prefix");
    uint<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    bytes(s);
  }

  // u32 length prefix.
  void text32(std::string_view s) {
    uint<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view v(reinterpret_cast<const char*>(data_.data()) + pos_, n);
    pos_ += n;
    return v;
  }

  template <typename T>
  T uint() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

  std::string text16() { return std::string(bytes(uint<std::uint16_t>())); }
  std::string text32() { return std::string(bytes(uint<std::uint32_t>())); }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw DataError(context_ + ": truncated at byte " + std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace cwat::detail

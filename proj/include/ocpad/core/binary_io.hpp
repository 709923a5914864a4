#pragma once

// Little-endian byte buffers for the container and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocpad/core/error.hpp"

namespace ocpad {

class ByteWriter {
 public:
  void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void put_u16(std::uint16_t v) { put_le(v); }
  void put_u32(std::uint32_t v) { put_le(v); }
  void put_u64(std::uint64_t v) { put_le(v); }

  void put_f32(std::span<const float> values) {
    const std::size_t at = buf_.size();
    buf_.resize(at + values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
      for (int b = 0; b < 4; ++b) buf_[at + i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }

  const std::vector<char>& bytes() const { return buf_; }

  void write_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
  }

 private:
  template <class U>
  void put_le(U v) {
    for (std::size_t b = 0; b < sizeof(U); ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }

  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string what) : buf_(std::move(bytes)), what_(std::move(what)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path.string());
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t get_u8() { return get_le<std::uint8_t>(); }
  std::uint16_t get_u16() { return get_le<std::uint16_t>(); }
  std::uint32_t get_u32() { return get_le<std::uint32_t>(); }
  std::uint64_t get_u64() { return get_le<std::uint64_t>(); }

  void get_f32(std::span<float> out) {
    need(out.size() * 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i * 4 + b])) << (8 * b);
      out[i] = std::bit_cast<float>(bits);
    }
    pos_ += out.size() * 4;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  std::size_t size() const { return buf_.size(); }
  const std::string& source() const { return what_; }

 private:
  void need(std::size_t n) const {
    if (n > buf_.size() - pos_)
      throw FormatError("'" + what_ + "' is truncated at byte " + std::to_string(pos_) + " (needed " +
                        std::to_string(n) + " more bytes)");
  }

  template <class U>
  U get_le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(buf_[pos_ + b])) << (8 * b));
    pos_ += sizeof(U);
    return v;
  }

  std::vector<char> buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace ocpad

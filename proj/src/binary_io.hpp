#pragma once

// Little-endian fixed-width encoding shared by the vector, adapter and index
// file formats. Reads past the end of the stream raise CorruptFile.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "facetsearch/error.hpp"

namespace facetsearch::detail {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void bytes(std::string_view b) { out_.write(b.data(), static_cast<std::streamsize>(b.size())); }

  void u32(std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(b.data(), 4);
  }

  void u64(std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(b.data(), 8);
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  template <typename Range>
  void f32s(const Range& values) {
    for (float v : values) f32(v);
  }

  void check(const std::string& what) const {
    if (!out_) throw Error("write failed: " + what);
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::string bytes(std::size_t n) {
    std::string b(n, '\0');
    read(b.data(), n);
    return b;
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    read(reinterpret_cast<char*>(b.data()), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint64_t u64() {
    std::array<unsigned char, 8> b{};
    read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }

  // True when the stream has no bytes left.
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CorruptFile(what_ + ": truncated");
    }
  }

  std::istream& in_;
  std::string what_;
};

}  // namespace facetsearch::detail

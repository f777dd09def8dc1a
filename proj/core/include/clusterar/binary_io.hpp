// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace clusterar {

static_assert(std::endian::native == std::endian::little, "binary formats are written in host (little-endian) order");

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::size_t v) {
    const auto x = static_cast<std::uint32_t>(v);
    bytes(&x, 4);
  }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void f32s(const std::vector<float>& v) { bytes(v.data(), v.size() * sizeof(float)); }
  void str(const std::string& s) {
    u32(s.size());
    bytes(s.data(), s.size());
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw std::runtime_error("unexpected end of binary stream");
  }
  std::uint8_t u8() { return read<std::uint8_t>(); }
  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::int32_t i32() { return read<std::int32_t>(); }
  std::uint64_t u64() { return read<std::uint64_t>(); }
  double f64() { return read<double>(); }
  std::vector<float> f32s(std::size_t n) {
    std::vector<float> v(n);
    bytes(v.data(), n * sizeof(float));
    return v;
  }
  std::string str(std::size_t max_len = 1u << 24) {
    const auto n = u32();
    if (n > max_len) throw std::runtime_error("binary string length " + std::to_string(n) + " exceeds limit");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  template <typename V>
  V read() {
    V v{};
    bytes(&v, sizeof(V));
    return v;
  }
  std::istream& in_;
};

}  // namespace clusterar

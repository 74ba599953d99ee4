#pragma once

// Little-endian binary primitives shared by the index and checkpoint file
// formats. Doubles are written as raw IEEE-754 bits so that a save/load
// round trip is bit-exact.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lexlink {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void magic(const char (&tag)[5]) { out_.write(tag, 4); }

  bool good() const { return out_.good(); }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    int c = in_.get();
    if (c == std::char_traits<char>::eof()) fail("unexpected end of file");
    return static_cast<std::uint8_t>(c);
  }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    std::uint64_t n = u64();
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(in_.gcount()) != n) fail("truncated string");
    return s;
  }

  void expect_magic(const char (&tag)[5]) {
    char buf[4];
    in_.read(buf, 4);
    if (in_.gcount() != 4 || std::string(buf, 4) != std::string(tag, 4))
      fail(std::string("bad magic, expected '") + tag + "'");
  }

  [[noreturn]] void fail(const std::string& why) {
    throw std::runtime_error("binary read error: " + why);
  }

 private:
  std::istream& in_;
};

}  // namespace lexlink

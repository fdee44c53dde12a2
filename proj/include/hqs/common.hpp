// Shared basics: tensor shape, flat indexing, error types, byte buffer I/O.
#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hqs {

// Errors map onto CLI exit codes: structural/parse -> 2, internal -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Malformed or inconsistent caller input (shape mismatch, bad schedule, ...).
struct StructuralError : Error {
  using Error::Error;
};
// Unreadable file or container bytes.
struct ParseError : Error {
  using Error::Error;
};
// Bitstream cannot be decoded against the shared state.
struct DecodeError : Error {
  using Error::Error;
};
// PMF cannot be represented (denominator underflow, support too large).
struct DegeneratePmfError : Error {
  using Error::Error;
};
// A should-never-happen invariant breach; indicates a bug, not bad input.
struct InternalError : Error {
  using Error::Error;
};

// Tensor extent. Components are addressed by a flat index in channel-major
// order: i = c*(h*w) + row*w + col. The flat order is part of the bitstream
// contract.
struct Shape {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::size_t volume() const {
    return std::size_t(channels) * height * width;
  }
  std::size_t plane() const { return std::size_t(height) * width; }
  std::uint32_t channel_of(std::size_t flat) const {
    return static_cast<std::uint32_t>(flat / plane());
  }
  bool operator==(const Shape&) const = default;
};

inline void require_valid(const Shape& s) {
  if (s.channels < 1 || s.height < 1 || s.width < 1)
    throw StructuralError("shape dimensions must be >= 1");
}

// Files carry 32-bit values; in-memory math is double. Canonicalizing through
// a float round-trip keeps encoder and decoder on identical parameter values.
inline double canon_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline void canon_f32(std::vector<double>& v) {
  for (double& x : v) x = canon_f32(x);
}

// Little-endian byte buffer writer/reader used by both file formats.
class ByteWriter {
 public:
  std::vector<std::uint8_t>& bytes() { return buf_; }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f32(double v) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f32() {
    std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw ParseError("truncated input");
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace hqs

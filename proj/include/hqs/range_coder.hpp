// 32-bit carry-less range coder with byte-wise renormalization. The decoder
// mirrors the encoder's low/range evolution exactly, so a complete stream is
// consumed byte-for-byte and any prefix reproduces a prefix of the symbols.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hqs/common.hpp"

namespace hqs {

// Cumulative frequencies are on a fixed 16-bit grid.
inline constexpr std::uint32_t kFreqTotal = 1u << 16;

class RangeEncoder {
 public:
  // cum/freq on a grid with total <= kFreqTotal, freq >= 1.
  void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
    range_ /= total;
    low_ += cum * range_;
    range_ *= freq;
    normalize();
  }

  // Emits the remaining 4 bytes of state. The encoder is spent afterwards.
  void finish() {
    for (int i = 0; i < 4; ++i) {
      out_.push_back(std::uint8_t(low_ >> 24));
      low_ <<= 8;
    }
  }

  std::vector<std::uint8_t>& bytes() { return out_; }
  const std::vector<std::uint8_t>& bytes() const { return out_; }

 private:
  void normalize() {
    while (true) {
      if ((low_ ^ (low_ + range_)) < kTop) {
        // top byte settled
      } else if (range_ < kBottom) {
        range_ = (0u - low_) & (kBottom - 1);  // carry-less underflow handling
      } else {
        break;
      }
      out_.push_back(std::uint8_t(low_ >> 24));
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  static constexpr std::uint32_t kTop = 1u << 24;
  static constexpr std::uint32_t kBottom = 1u << 16;

  std::uint32_t low_ = 0;
  std::uint32_t range_ = 0xffffffffu;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
  }

  // Cumulative-frequency target of the next symbol; consumes no bytes.
  std::uint32_t decode_target(std::uint32_t total) {
    range_ /= total;
    std::uint32_t t = (code_ - low_) / range_;
    return t >= total ? total - 1 : t;
  }

  // Advances past the symbol chosen from the target. May read ahead; the
  // symbol just decoded stays valid even if the stream ends mid-refill.
  void decode_advance(std::uint32_t cum, std::uint32_t freq) {
    low_ += cum * range_;
    range_ *= freq;
    while (true) {
      if ((low_ ^ (low_ + range_)) < kTop) {
      } else if (range_ < kBottom) {
        range_ = (0u - low_) & (kBottom - 1);
      } else {
        break;
      }
      code_ = (code_ << 8) | next_byte();
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  // True once any read ran past the end of the input. State is then stale:
  // no further symbol may be decoded.
  bool exhausted() const { return exhausted_; }
  std::size_t bytes_consumed() const { return pos_; }

 private:
  std::uint8_t next_byte() {
    if (pos_ >= in_.size()) {
      exhausted_ = true;
      return 0;
    }
    return in_[pos_++];
  }

  static constexpr std::uint32_t kTop = 1u << 24;
  static constexpr std::uint32_t kBottom = 1u << 16;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t low_ = 0;
  std::uint32_t range_ = 0xffffffffu;
  std::uint32_t code_ = 0;
  bool exhausted_ = false;
};

}  // namespace hqs

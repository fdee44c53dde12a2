// Latent file format (.hql): magic "HQL1" | u8 version | u32 C,H,W LE |
// planes y, mu, sigma as C*H*W f32 LE values in channel-major order.
// Version byte: low nibble = 1; bit 7 set flags an optional fourth plane
// carrying an externally produced importance map.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hqs/tensor.hpp"

namespace hqs {

struct LatentFile {
  LatentTensor latent;
  GaussianParams params;
  std::optional<std::vector<double>> importance;  // values in [0,1] if present
};

std::vector<std::uint8_t> store_latent(const LatentFile& f);
LatentFile load_latent(std::span<const std::uint8_t> bytes);

// Filesystem convenience wrappers; throw ParseError on I/O failure.
void write_latent_file(const std::string& path, const LatentFile& f);
LatentFile read_latent_file(const std::string& path);

std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace hqs

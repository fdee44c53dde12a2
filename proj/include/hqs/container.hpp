// Progressive container (.hqs): header with everything the decoder needs to
// rebuild masks, ordering and PMFs, followed by one range-coded segment per
// quantization layer. All integers little-endian, all reals f32.
//
//   "HQS1" | u8 version | u32 C,H,W | u8 L | u32 K | f32 T |
//   step table (L*C f32) | inv-step table (L*C f32) | gamma table (L f32) |
//   mu plane | sigma plane | u8 flags [| importance plane] |
//   per layer: u64 segment byte length + payload
//
// flags bit 0: an importance plane (C*H*W f32) follows the flags byte.
#pragma once

#include <optional>
#include <vector>

#include "hqs/schedule.hpp"
#include "hqs/tensor.hpp"

namespace hqs {

struct ContainerHeader {
  Shape shape;
  int k_count = 1;
  double adjust_threshold = 0.3;
  StepSchedule schedule;  // layers/channels implied by shape + tables
  std::vector<double> mu;
  std::vector<double> sigma;
  std::optional<std::vector<double>> importance;
};

// segments holds only the layers present in the byte stream (a prefix of the
// full layer list); a truncated container simply carries fewer or shorter
// segments.
struct Container {
  ContainerHeader header;
  std::vector<std::vector<std::uint8_t>> segments;
};

std::vector<std::uint8_t> serialize(const Container& c);
Container parse_container(std::span<const std::uint8_t> bytes);

// Serialized header length in bytes (everything before the first segment).
std::size_t header_size(const ContainerHeader& h);

void write_container_file(const std::string& path, const Container& c);
Container read_container_file(const std::string& path);

}  // namespace hqs

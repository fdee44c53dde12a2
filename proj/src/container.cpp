#include "hqs/container.hpp"

#include <cmath>

#include "hqs/latent_io.hpp"
#include "hqs/quant.hpp"

namespace hqs {

namespace {
constexpr char kMagic[4] = {'H', 'Q', 'S', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kImportanceFlag = 0x01;

void validate_header(const ContainerHeader& h) {
  require_valid(h.shape);
  validate_schedule(h.schedule);
  if (h.schedule.channels != int(h.shape.channels))
    throw StructuralError("schedule channel count does not match shape");
  if (h.schedule.layers < 1 || h.schedule.layers > 255)
    throw StructuralError("layer count must be in [1,255]");
  validate(QuantConfig{h.k_count, h.adjust_threshold});
  const std::size_t n = h.shape.volume();
  if (h.mu.size() != n || h.sigma.size() != n)
    throw StructuralError("container parameter plane size mismatch");
  for (double s : h.sigma)
    if (!(s > 0.0) || !std::isfinite(s))
      throw StructuralError("container sigma plane must be strictly positive");
  if (h.importance && h.importance->size() != n)
    throw StructuralError("container importance plane size mismatch");
}
}  // namespace

std::size_t header_size(const ContainerHeader& h) {
  const std::size_t n = h.shape.volume();
  const std::size_t tables =
      std::size_t(h.schedule.layers) * h.shape.channels * 2 + h.schedule.layers;
  return 4 + 1 + 12 + 1 + 4 + 4 + tables * 4 + n * 8 + 1 + (h.importance ? n * 4 : 0);
}

std::vector<std::uint8_t> serialize(const Container& c) {
  const ContainerHeader& h = c.header;
  validate_header(h);
  if (c.segments.size() > std::size_t(h.schedule.layers))
    throw StructuralError("more segments than layers");

  ByteWriter w;
  w.raw(kMagic, 4);
  w.u8(kVersion);
  w.u32(h.shape.channels);
  w.u32(h.shape.height);
  w.u32(h.shape.width);
  w.u8(std::uint8_t(h.schedule.layers));
  w.u32(std::uint32_t(h.k_count));
  w.f32(h.adjust_threshold);
  for (double v : h.schedule.step) w.f32(v);
  for (double v : h.schedule.inv_step) w.f32(v);
  for (double v : h.schedule.gamma) w.f32(v);
  for (double v : h.mu) w.f32(v);
  for (double v : h.sigma) w.f32(v);
  w.u8(h.importance ? kImportanceFlag : 0);
  if (h.importance)
    for (double v : *h.importance) w.f32(v);
  for (const auto& seg : c.segments) {
    w.u64(seg.size());
    w.raw(seg.data(), seg.size());
  }
  return std::move(w.bytes());
}

Container parse_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ParseError("bad container magic");
  if (r.u8() != kVersion) throw ParseError("unsupported container version");

  Container c;
  ContainerHeader& h = c.header;
  h.shape = Shape{r.u32(), r.u32(), r.u32()};
  require_valid(h.shape);
  const std::size_t n = h.shape.volume();
  if (n > (std::size_t(1) << 28)) throw ParseError("container shape implausibly large");
  int layers = r.u8();
  h.k_count = int(r.u32());
  h.adjust_threshold = r.f32();
  // Bound allocations by the bytes actually present: a corrupt header must
  // not drive giant resizes.
  std::size_t tables = (std::size_t(layers) * h.shape.channels * 2 + layers) * 4;
  if (r.remaining() < tables + n * 8 + 1)
    throw ParseError("container header shorter than its declared tables");
  h.schedule.layers = layers;
  h.schedule.channels = int(h.shape.channels);
  h.schedule.step.resize(std::size_t(layers) * h.shape.channels);
  h.schedule.inv_step.resize(h.schedule.step.size());
  h.schedule.gamma.resize(layers);
  for (double& v : h.schedule.step) v = r.f32();
  for (double& v : h.schedule.inv_step) v = r.f32();
  for (double& v : h.schedule.gamma) v = r.f32();
  h.mu.resize(n);
  h.sigma.resize(n);
  for (double& v : h.mu) v = r.f32();
  for (double& v : h.sigma) v = r.f32();
  std::uint8_t flags = r.u8();
  if (flags & ~kImportanceFlag) throw ParseError("unknown container flags");
  if (flags & kImportanceFlag) {
    if (r.remaining() < n * 4) throw ParseError("truncated importance plane");
    h.importance.emplace(n);
    for (double& v : *h.importance) {
      double x = r.f32();
      if (!(x >= 0.0 && x <= 1.0)) throw ParseError("importance value outside [0,1]");
      v = x;
    }
  }
  validate_header(h);

  // Segments: a byte-truncated container is still decodable; a short final
  // segment is clipped to what is present and trailing layers are absent.
  for (int l = 0; l < layers; ++l) {
    if (r.remaining() < 8) break;
    std::uint64_t len = r.u64();
    std::uint64_t take = std::min<std::uint64_t>(len, r.remaining());
    auto payload = r.raw(std::size_t(take));
    c.segments.emplace_back(payload.begin(), payload.end());
    if (take < len) break;
  }
  return c;
}

void write_container_file(const std::string& path, const Container& c) {
  write_binary_file(path, serialize(c));
}

Container read_container_file(const std::string& path) {
  auto bytes = read_binary_file(path);
  return parse_container(bytes);
}

}  // namespace hqs

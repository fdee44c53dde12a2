#include "hqs/latent_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

namespace hqs {

namespace {
constexpr char kMagic[4] = {'H', 'Q', 'L', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kImportanceFlag = 0x80;
}  // namespace

std::vector<std::uint8_t> store_latent(const LatentFile& f) {
  validate(f.latent);
  validate(f.params);
  if (!(f.latent.shape == f.params.shape))
    throw StructuralError("latent/parameter shape mismatch");
  const std::size_t n = f.latent.shape.volume();
  if (f.importance && f.importance->size() != n)
    throw StructuralError("importance plane size mismatch");

  ByteWriter w;
  w.raw(kMagic, 4);
  w.u8(kVersion | (f.importance ? kImportanceFlag : 0));
  w.u32(f.latent.shape.channels);
  w.u32(f.latent.shape.height);
  w.u32(f.latent.shape.width);
  for (double v : f.latent.values) w.f32(v);
  for (double v : f.params.mu) w.f32(v);
  for (double v : f.params.sigma) w.f32(v);
  if (f.importance)
    for (double v : *f.importance) w.f32(v);
  return std::move(w.bytes());
}

LatentFile load_latent(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ParseError("bad latent magic");
  std::uint8_t version = r.u8();
  if ((version & 0x0f) != kVersion) throw ParseError("unsupported latent version");
  bool has_importance = (version & kImportanceFlag) != 0;

  LatentFile f;
  f.latent.shape = Shape{r.u32(), r.u32(), r.u32()};
  require_valid(f.latent.shape);
  const std::size_t n = f.latent.shape.volume();
  const std::size_t planes = has_importance ? 4 : 3;
  if (r.remaining() != planes * n * 4) throw ParseError("latent payload size mismatch");

  f.params.shape = f.latent.shape;
  f.latent.values.resize(n);
  f.params.mu.resize(n);
  f.params.sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.latent.values[i] = r.f32();
  for (std::size_t i = 0; i < n; ++i) f.params.mu[i] = r.f32();
  for (std::size_t i = 0; i < n; ++i) f.params.sigma[i] = r.f32();
  if (has_importance) {
    f.importance.emplace(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = r.f32();
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError("importance value outside [0,1]");
      (*f.importance)[i] = v;
    }
  }
  validate(f.latent);
  validate(f.params);
  return f;
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"),
                                                     &std::fclose);
  if (!fp) throw ParseError("cannot open '" + path + "' for reading");
  std::fseek(fp.get(), 0, SEEK_END);
  long len = std::ftell(fp.get());
  if (len < 0) throw ParseError("cannot stat '" + path + "'");
  std::fseek(fp.get(), 0, SEEK_SET);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len), 0);
  if (len > 0 && std::fread(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size())
    throw ParseError("short read on '" + path + "'");
  return bytes;
}

void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"),
                                                     &std::fclose);
  if (!fp) throw ParseError("cannot open '" + path + "' for writing");
  if (!bytes.empty() && std::fwrite(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size())
    throw ParseError("short write on '" + path + "'");
}

void write_latent_file(const std::string& path, const LatentFile& f) {
  write_binary_file(path, store_latent(f));
}

LatentFile read_latent_file(const std::string& path) {
  auto bytes = read_binary_file(path);
  return load_latent(bytes);
}

}  // namespace hqs

#include "hqs/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hqs {

ImportanceMap importance_from_sigma(const GaussianParams& params) {
  validate(params);
  const std::size_t n = params.shape.volume();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return params.sigma[a] < params.sigma[b];
  });

  ImportanceMap im;
  im.shape = params.shape;
  im.values.resize(n);
  // Midrank of each tie group, normalized by n+1 so values stay in (0,1).
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && params.sigma[order[j + 1]] == params.sigma[order[i]]) ++j;
    double midrank = (double(i + 1) + double(j + 1)) / 2.0;
    double v = midrank / double(n + 1);
    for (std::size_t k = i; k <= j; ++k) im.values[order[k]] = v;
    i = j + 1;
  }
  return im;
}

std::vector<std::uint8_t> adjust_and_binarize(const ImportanceMap& im, double gamma) {
  if (!(gamma > 0.0)) throw StructuralError("gamma must be positive");
  std::vector<std::uint8_t> raw(im.values.size());
  for (std::size_t i = 0; i < im.values.size(); ++i) {
    double v = im.values[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw StructuralError("importance value outside [0,1]");
    raw[i] = std::pow(v, gamma) >= 0.5 ? 1 : 0;
  }
  return raw;
}

SelectionMask inclusive_mask(const SelectionMask& prev, const std::vector<std::uint8_t>& raw) {
  if (prev.bits.size() != raw.size())
    throw StructuralError("mask shape mismatch");
  SelectionMask out;
  out.layer = prev.layer + 1;
  out.bits.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.bits[i] = prev.bits[i] | (raw[i] ? 1 : 0);
  return out;
}

PackedComponents pack(const LatentTensor& tensor, const SelectionMask& mask) {
  if (mask.bits.size() != tensor.values.size())
    throw StructuralError("mask/tensor size mismatch");
  PackedComponents out;
  out.mask = mask;
  out.values.reserve(mask.popcount());
  for (std::size_t i = 0; i < mask.bits.size(); ++i)
    if (mask.bits[i]) out.values.push_back(tensor.values[i]);
  return out;
}

LatentTensor scatter(const PackedComponents& packed, Shape shape) {
  require_valid(shape);
  if (packed.mask.bits.size() != shape.volume())
    throw StructuralError("mask/shape size mismatch");
  if (packed.values.size() != packed.mask.popcount())
    throw StructuralError("packed length does not match mask popcount");
  LatentTensor out(shape);
  std::size_t j = 0;
  for (std::size_t i = 0; i < packed.mask.bits.size(); ++i)
    if (packed.mask.bits[i]) out.values[i] = packed.values[j++];
  return out;
}

}  // namespace hqs

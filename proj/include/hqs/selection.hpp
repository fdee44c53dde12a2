// Per-layer binary selection masks from a canonical importance map, with
// layer-inclusive growth, plus pack/scatter of selected components.
#pragma once

#include <vector>

#include "hqs/tensor.hpp"

namespace hqs {

// Per-component scores in [0,1]; higher means coded earlier/more layers.
struct ImportanceMap {
  Shape shape;
  std::vector<double> values;
};

// Inclusive across layers: mask(l) >= mask(l-1) component-wise.
struct SelectionMask {
  int layer = 0;  // 0 = the all-zeros virtual mask below layer 1
  std::vector<std::uint8_t> bits;

  std::size_t popcount() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
};

// Rank-normalized sigma (midranks over N+1), order-preserving and strictly
// inside (0,1); constant sigma maps to a constant 0.5 map. Stands in for a
// learned importance head when no explicit map is supplied.
ImportanceMap importance_from_sigma(const GaussianParams& params);

// m'_i = round(im_i ^ gamma), threshold exactly 0.5 with round-half-up.
std::vector<std::uint8_t> adjust_and_binarize(const ImportanceMap& im, double gamma);

// out = prev OR raw, layer = prev.layer + 1. Layer 1 uses the raw mask as-is.
SelectionMask inclusive_mask(const SelectionMask& prev, const std::vector<std::uint8_t>& raw);

// Selected component values, packed in ascending flat-index order.
struct PackedComponents {
  std::vector<double> values;
  SelectionMask mask;
};

PackedComponents pack(const LatentTensor& tensor, const SelectionMask& mask);
// Unselected slots are exactly zero.
LatentTensor scatter(const PackedComponents& packed, Shape shape);

}  // namespace hqs

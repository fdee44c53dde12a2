// Latent tensors with paired Gaussian parameters, and mean centering.
#pragma once

#include <vector>

#include "hqs/common.hpp"

namespace hqs {

// Real-valued components in channel-major flat order.
struct LatentTensor {
  Shape shape;
  std::vector<double> values;

  LatentTensor() = default;
  LatentTensor(Shape s, std::vector<double> v) : shape(s), values(std::move(v)) {}
  explicit LatentTensor(Shape s) : shape(s), values(s.volume(), 0.0) {}
};

// Per-component Gaussian model (mu, sigma); sigma strictly positive,
// same shape as the paired tensor.
struct GaussianParams {
  Shape shape;
  std::vector<double> mu;
  std::vector<double> sigma;
};

// Mean-removed components: values[i] = latent[i] - mu[i].
struct UnbiasedLatent {
  Shape shape;
  std::vector<double> values;
};

// Throws StructuralError on shape mismatch or invariant breach.
void validate(const LatentTensor& t);
void validate(const GaussianParams& p);

UnbiasedLatent center(const LatentTensor& latent, const GaussianParams& params);
LatentTensor uncenter(const UnbiasedLatent& unbiased, const GaussianParams& params);

}  // namespace hqs

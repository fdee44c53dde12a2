#include "hqs/tensor.hpp"

#include <cmath>

namespace hqs {

void validate(const LatentTensor& t) {
  require_valid(t.shape);
  if (t.values.size() != t.shape.volume())
    throw StructuralError("latent value count does not match shape");
  for (double v : t.values)
    if (!std::isfinite(v)) throw StructuralError("latent contains non-finite value");
}

void validate(const GaussianParams& p) {
  require_valid(p.shape);
  if (p.mu.size() != p.shape.volume() || p.sigma.size() != p.shape.volume())
    throw StructuralError("gaussian parameter count does not match shape");
  for (double m : p.mu)
    if (!std::isfinite(m)) throw StructuralError("mu contains non-finite value");
  for (double s : p.sigma)
    if (!(s > 0.0) || !std::isfinite(s))
      throw StructuralError("sigma must be strictly positive and finite");
}

UnbiasedLatent center(const LatentTensor& latent, const GaussianParams& params) {
  if (!(latent.shape == params.shape))
    throw StructuralError("latent/parameter shape mismatch in center()");
  UnbiasedLatent out;
  out.shape = latent.shape;
  out.values.resize(latent.values.size());
  for (std::size_t i = 0; i < latent.values.size(); ++i)
    out.values[i] = latent.values[i] - params.mu[i];
  return out;
}

LatentTensor uncenter(const UnbiasedLatent& unbiased, const GaussianParams& params) {
  if (!(unbiased.shape == params.shape))
    throw StructuralError("latent/parameter shape mismatch in uncenter()");
  LatentTensor out(unbiased.shape);
  for (std::size_t i = 0; i < unbiased.values.size(); ++i)
    out.values[i] = unbiased.values[i] + params.mu[i];
  return out;
}

}  // namespace hqs

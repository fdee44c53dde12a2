// Seeded synthetic latent sources (the artifact's stand-in for a neural
// encoder as the latent producer).
#pragma once

#include <cstdint>
#include <string>

#include "hqs/tensor.hpp"

namespace hqs {

// sigma_mode:
//   PerChannel: one sigma per channel, log-spaced deterministically from
//               sigma_lo to sigma_hi across channels.
//   Iid:        sigma drawn log-uniform from [sigma_lo, sigma_hi] per
//               component.
// mu is drawn uniform from [mu_lo, mu_hi] per component (default 0).
// Sampling is a pure function of the config, including the seed.
struct SourceConfig {
  Shape shape{4, 64, 64};
  double sigma_lo = 0.1;
  double sigma_hi = 10.0;
  enum class SigmaMode { PerChannel, Iid } sigma_mode = SigmaMode::PerChannel;
  double mu_lo = 0.0;
  double mu_hi = 0.0;
  std::uint64_t seed = 1;
};

struct SampledLatent {
  LatentTensor latent;
  GaussianParams params;
};

// y_i ~ Normal(mu_i, sigma_i^2). All emitted values are f32-canonical so a
// file round trip is bit-exact.
SampledLatent sample_source(const SourceConfig& cfg);

// Parses "CxHxW[:lo..hi][:channel|iid][:mu=a..b]", e.g. "4x64x64:0.1..10:channel".
SourceConfig parse_source_spec(const std::string& spec);

}  // namespace hqs

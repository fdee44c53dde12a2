#include "hqs/source.hpp"

#include <cmath>
#include <cstdio>

#include "hqs/rng.hpp"

namespace hqs {

SampledLatent sample_source(const SourceConfig& cfg) {
  require_valid(cfg.shape);
  if (!(cfg.sigma_lo > 0.0) || cfg.sigma_hi < cfg.sigma_lo)
    throw StructuralError("sigma range must satisfy 0 < lo <= hi");
  if (cfg.mu_hi < cfg.mu_lo) throw StructuralError("mu range must satisfy lo <= hi");

  const std::size_t n = cfg.shape.volume();
  SampledLatent out;
  out.latent.shape = cfg.shape;
  out.latent.values.resize(n);
  out.params.shape = cfg.shape;
  out.params.mu.resize(n);
  out.params.sigma.resize(n);

  Rng rng(cfg.seed);

  std::vector<double> channel_sigma(cfg.shape.channels);
  if (cfg.sigma_mode == SourceConfig::SigmaMode::PerChannel) {
    const int c_count = int(cfg.shape.channels);
    for (int c = 0; c < c_count; ++c) {
      double t = c_count == 1 ? 0.5 : double(c) / double(c_count - 1);
      channel_sigma[c] = cfg.sigma_lo * std::pow(cfg.sigma_hi / cfg.sigma_lo, t);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    double sigma = cfg.sigma_mode == SourceConfig::SigmaMode::PerChannel
                       ? channel_sigma[cfg.shape.channel_of(i)]
                       : rng.next_log_uniform(cfg.sigma_lo, cfg.sigma_hi);
    double mu = cfg.mu_lo == cfg.mu_hi ? cfg.mu_lo : rng.next_uniform(cfg.mu_lo, cfg.mu_hi);
    sigma = canon_f32(sigma);
    mu = canon_f32(mu);
    double y = canon_f32(mu + sigma * rng.next_gaussian());
    out.params.sigma[i] = sigma;
    out.params.mu[i] = mu;
    out.latent.values[i] = y;
  }
  return out;
}

SourceConfig parse_source_spec(const std::string& spec) {
  SourceConfig cfg;
  // Split on ':'.
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto colon = spec.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(spec.substr(start));
      break;
    }
    parts.push_back(spec.substr(start, colon - start));
    start = colon + 1;
  }
  if (parts.empty() || parts[0].empty()) throw ParseError("empty source spec");

  unsigned c = 0, h = 0, w = 0;
  if (std::sscanf(parts[0].c_str(), "%ux%ux%u", &c, &h, &w) != 3)
    throw ParseError("source spec must start with CxHxW");
  cfg.shape = Shape{c, h, w};

  for (std::size_t p = 1; p < parts.size(); ++p) {
    const std::string& s = parts[p];
    if (s.empty()) continue;
    double lo, hi;
    if (std::sscanf(s.c_str(), "mu=%lf..%lf", &lo, &hi) == 2) {
      cfg.mu_lo = lo;
      cfg.mu_hi = hi;
    } else if (std::sscanf(s.c_str(), "%lf..%lf", &lo, &hi) == 2) {
      cfg.sigma_lo = lo;
      cfg.sigma_hi = hi;
    } else if (s == "channel") {
      cfg.sigma_mode = SourceConfig::SigmaMode::PerChannel;
    } else if (s == "iid") {
      cfg.sigma_mode = SourceConfig::SigmaMode::Iid;
    } else {
      throw ParseError("unrecognized source spec field '" + s + "'");
    }
  }
  return cfg;
}

}  // namespace hqs

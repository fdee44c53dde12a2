#include "hqs/quant.hpp"

#include <algorithm>
#include <cmath>

namespace hqs {

void validate(const QuantConfig& cfg) {
  if (cfg.k_count < 1 || cfg.k_count % 2 == 0)
    throw StructuralError("K must be an odd positive integer");
  if (!(cfg.adjust_threshold >= 0.0) || cfg.adjust_threshold >= 1.0)
    throw StructuralError("adjustment threshold must lie in [0,1)");
}

IntervalState init_interval(double step, int k_count) {
  if (!(step > 0.0)) throw StructuralError("init_interval requires a positive step");
  if (k_count < 1 || k_count % 2 == 0)
    throw StructuralError("init_interval requires odd K");
  double half = step * (double(k_count) * 0.5);
  return IntervalState{-half, half, 0.0};
}

int choose_k_range(const UnbiasedLatent& unbiased, const StepSchedule& schedule) {
  validate_schedule(schedule);
  double max_ratio = 0.0;
  double max_abs = 0.0;
  std::uint32_t max_channel = 0;
  for (std::size_t i = 0; i < unbiased.values.size(); ++i) {
    std::uint32_t c = unbiased.shape.channel_of(i);
    double r = std::fabs(unbiased.values[i]) / schedule.step_at(1, int(c));
    if (r > max_ratio) {
      max_ratio = r;
      max_abs = std::fabs(unbiased.values[i]);
      max_channel = c;
    }
  }
  int k = int(std::ceil(2.0 * max_ratio));
  if (k < 1) k = 1;
  if (k % 2 == 0) ++k;
  // Guard the FP edge where the ceil-ed ratio still leaves the extreme
  // component an ulp outside the layer-1 range.
  while (max_abs > schedule.step_at(1, int(max_channel)) * (double(k) * 0.5)) k += 2;
  return k;
}

int covering_k_count(double width, double step) {
  if (!(step > 0.0)) throw StructuralError("covering_k_count requires a positive step");
  double q = width / step;
  int n = int(std::ceil(q * (1.0 - 1e-9)));
  if (n < 1) n = 1;
  if (n % 2 == 0) ++n;
  return n;
}

namespace {

BoundarySet build_edges(const IntervalState& state, double step, int k_count) {
  BoundarySet bs;
  bs.k_offset = (k_count - 1) / 2;
  bs.step_used = step;
  bs.edges.resize(std::size_t(k_count) + 1);
  for (int kk = 0; kk <= k_count; ++kk) {
    double c = (double(kk - bs.k_offset) - 0.5) * step + state.recon;
    bs.edges[kk] = std::clamp(c, state.lo, state.hi);
  }
  // The edge list must span the parent exactly; candidates always do when
  // k_count covers the width, and pinning keeps the quantizer total when a
  // caller passes a smaller K.
  bs.edges.front() = state.lo;
  bs.edges.back() = state.hi;
  bs.valid_count = 0;
  for (int kk = 0; kk < k_count; ++kk)
    if (bs.width(kk) > 0.0) ++bs.valid_count;
  return bs;
}

}  // namespace

BoundarySet compute_boundaries(const IntervalState& state, double step, int k_count) {
  if (!(step > 0.0)) throw StructuralError("compute_boundaries requires a positive step");
  if (k_count < 1 || k_count % 2 == 0)
    throw StructuralError("compute_boundaries requires odd K");
  if (!(state.lo < state.hi)) throw InternalError("degenerate interval state");
  return build_edges(state, step, k_count);
}

BoundarySet adjust_boundaries(const BoundarySet& bs, double step, double threshold,
                              const IntervalState& state) {
  if (threshold <= 0.0) return bs;
  if (bs.valid_count < 3) return bs;

  double first_width = 0.0, last_width = 0.0;
  for (int kk = 0; kk < bs.size(); ++kk) {
    double w = bs.width(kk);
    if (w > 0.0) {
      first_width = w;
      break;
    }
  }
  for (int kk = bs.size() - 1; kk >= 0; --kk) {
    double w = bs.width(kk);
    if (w > 0.0) {
      last_width = w;
      break;
    }
  }
  double ratio = std::min(first_width, last_width) / step;
  if (!(ratio < threshold)) return bs;

  double expanded = (state.hi - state.lo) / double(bs.valid_count - 2);
  BoundarySet out = build_edges(state, expanded, bs.size());
  out.adjusted = true;
  return out;
}

int quantize(double value, const BoundarySet& bs) {
  if (value < bs.lo() || value > bs.hi())
    throw InternalError("quantize: value outside parent interval");
  // First edge strictly greater than value; the interval starting one edge
  // earlier contains it under the half-open convention.
  auto it = std::upper_bound(bs.edges.begin(), bs.edges.end(), value);
  int kk;
  if (it == bs.edges.end()) {
    kk = bs.size() - 1;  // value == hi: closed top edge
  } else {
    kk = int(it - bs.edges.begin()) - 1;
  }
  // Step down over zero-width intervals (possible only at the top edge,
  // where clipping duplicates hi).
  while (kk > 0 && !(bs.width(kk) > 0.0)) --kk;
  if (!(bs.width(kk) > 0.0)) throw InternalError("quantize: no valid sub-interval");
  return kk;
}

DequantResult dequantize(int kk, const BoundarySet& bs) {
  if (kk < 0 || kk >= bs.size()) throw DecodeError("sub-interval index out of range");
  if (!(bs.width(kk) > 0.0)) throw DecodeError("sub-interval index is zero-width");
  DequantResult r;
  r.recon = (bs.edges[kk] + bs.edges[kk + 1]) / 2.0;
  r.child = IntervalState{bs.edges[kk], bs.edges[kk + 1], r.recon};
  return r;
}

LatentTensor finalize(const UnbiasedLatent& recon, const GaussianParams& params,
                      const std::vector<double>& step_per_channel,
                      const std::vector<double>& inv_step_per_channel) {
  if (!(recon.shape == params.shape))
    throw StructuralError("finalize: shape mismatch");
  if (step_per_channel.size() != recon.shape.channels ||
      inv_step_per_channel.size() != recon.shape.channels)
    throw StructuralError("finalize: per-channel step vector size mismatch");
  LatentTensor out(recon.shape);
  // Per-channel ratio first: with inv == step the factor is exactly 1 and
  // finalize is an exact identity on recon + mu.
  std::vector<double> factor(recon.shape.channels);
  for (std::uint32_t c = 0; c < recon.shape.channels; ++c) {
    if (!(step_per_channel[c] > 0.0) || !(inv_step_per_channel[c] > 0.0))
      throw StructuralError("finalize: non-positive step");
    factor[c] = inv_step_per_channel[c] / step_per_channel[c];
  }
  for (std::size_t i = 0; i < recon.values.size(); ++i)
    out.values[i] = (recon.values[i] + params.mu[i]) * factor[recon.shape.channel_of(i)];
  return out;
}

}  // namespace hqs

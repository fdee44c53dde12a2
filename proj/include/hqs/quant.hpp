// Nested interval quantization: per-component sub-interval boundaries from a
// step size and the parent interval, adaptive boundary adjustment, index
// quantization and midpoint dequantization, and the final inverse scaling.
#pragma once

#include <vector>

#include "hqs/schedule.hpp"
#include "hqs/tensor.hpp"

namespace hqs {

// Current interval of a component plus the lower-layer reconstruction.
// recon is always the interval midpoint (layer 1 starts at 0).
struct IntervalState {
  double lo = 0.0;
  double hi = 0.0;
  double recon = 0.0;

  double width() const { return hi - lo; }
};

// K (odd candidate sub-interval count) and the boundary adjustment threshold.
// T = 0 disables adjustment.
struct QuantConfig {
  int k_count = 1;
  double adjust_threshold = 0.3;
};

void validate(const QuantConfig& cfg);

// Candidate boundaries clamped into the parent interval. edges has size()+1
// entries, non-decreasing, with edges.front() == parent lo and edges.back()
// == parent hi. Sub-interval k (signed, zero-based kk = k + k_offset) spans
// [edges[kk], edges[kk+1]); clipping can make it zero-width, in which case it
// is invalid but keeps its index so both coder sides agree on the k space.
struct BoundarySet {
  std::vector<double> edges;
  int k_offset = 0;
  int valid_count = 0;
  bool adjusted = false;
  double step_used = 0.0;

  int size() const { return int(edges.size()) - 1; }
  double width(int kk) const { return edges[kk + 1] - edges[kk]; }
  double lo() const { return edges.front(); }
  double hi() const { return edges.back(); }
};

// First-layer interval: [-step*(K/2), +step*(K/2)] with virtual lower-layer
// reconstruction 0. K/2 is the real value, so the range is K*step wide.
IntervalState init_interval(double step, int k_count);

// Smallest odd K whose layer-1 range covers every component:
// K >= 2*max_i(|y*_i| / step(1, channel(i))).
int choose_k_range(const UnbiasedLatent& unbiased, const StepSchedule& schedule);

// Odd candidate count that tiles a parent of the given width with the given
// step: odd_ceil(width/step), with a 1e-9 relative tolerance so ratios that
// are integral up to FP drift do not gain sliver intervals.
int covering_k_count(double width, double step);

// Candidate centers c^k = (k - 0.5)*step + state.recon for k in
// [-(K-1)/2, (K+1)/2], clamped into [state.lo, state.hi]; recon sits midway
// between the two centermost candidates.
BoundarySet compute_boundaries(const IntervalState& state, double step, int k_count);

// When the narrower of the first/last valid widths falls below T*step and at
// least 3 sub-intervals are valid, rebuild with the expanded step
// (hi-lo)/(valid_count-2). Applied at most once; never recurses.
BoundarySet adjust_boundaries(const BoundarySet& bs, double step, double threshold,
                              const IntervalState& state);

// Zero-based index kk of the sub-interval containing value; the topmost valid
// interval is closed at the upper edge. Throws InternalError if value lies
// outside the parent (nesting violated upstream).
int quantize(double value, const BoundarySet& bs);

struct DequantResult {
  double recon = 0.0;
  IntervalState child;
};

// Midpoint of sub-interval kk plus the child interval for the next layer.
// Throws DecodeError for an out-of-range or zero-width index.
DequantResult dequantize(int kk, const BoundarySet& bs);

// Final inverse scaling: out_i = (recon_i + mu_i) / step_c * inv_step_c with
// per-channel step lookup. With inv == step this is identity on recon + mu.
LatentTensor finalize(const UnbiasedLatent& recon, const GaussianParams& params,
                      const std::vector<double>& step_per_channel,
                      const std::vector<double>& inv_step_per_channel);

}  // namespace hqs

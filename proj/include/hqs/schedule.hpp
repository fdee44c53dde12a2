// Per-layer, per-channel quantization step schedules.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hqs/common.hpp"

namespace hqs {

// Steps must be positive and, within each channel, non-increasing from
// layer 1 to layer L (coarse to fine). gamma holds the per-layer mask
// adjustment exponents.
struct StepSchedule {
  int layers = 0;
  int channels = 0;
  std::vector<double> step;      // layers*channels, layer-major
  std::vector<double> inv_step;  // same layout
  std::vector<double> gamma;     // one per layer

  double& step_at(int layer, int channel) { return step[idx(layer, channel)]; }
  double step_at(int layer, int channel) const { return step[idx(layer, channel)]; }
  double& inv_step_at(int layer, int channel) { return inv_step[idx(layer, channel)]; }
  double inv_step_at(int layer, int channel) const { return inv_step[idx(layer, channel)]; }

  std::size_t idx(int layer, int channel) const {
    // layer is 1-based, channel 0-based.
    return std::size_t(layer - 1) * channels + channel;
  }
};

// Throws StructuralError naming the first violating (layer, channel).
void validate_schedule(const StepSchedule& s);

// Handcrafted ladder: step(l, c) = finest_step * 3^(layers - l) for every
// channel, inv_step = step, gamma = all-pass (selects everything).
StepSchedule trit_schedule(int layers, int channels, double finest_step);

// All-pass exponent: im^gamma rounds to 1 for any importance in (0, 1].
inline constexpr double kAllPassGamma = 1e-9;

// Geometric interpolation of the step vectors at a fractional layer index.
// point is clamped to [1, layers]; integer points return the exact table row.
struct InterpolatedSteps {
  std::vector<double> step;      // one per channel
  std::vector<double> inv_step;  // one per channel
};
InterpolatedSteps interpolate_delta(const StepSchedule& s, double point);

// Text key-value serialization (consumed by the CLI fit/encode commands).
std::string schedule_to_text(const StepSchedule& s, double adjust_threshold);
struct ParsedSchedule {
  StepSchedule schedule;
  double adjust_threshold = 0.3;
};
ParsedSchedule schedule_from_text(const std::string& text);

// Round every entry through f32 so in-memory values match what any file or
// container round trip would produce.
void canonicalize(StepSchedule& s);

}  // namespace hqs

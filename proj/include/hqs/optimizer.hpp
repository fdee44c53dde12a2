// Desk-scale rate-distortion optimizer: learns step schedules (step,
// inverse step, mask exponents) by derivative-free coordinate descent on a
// summed per-layer rate + lambda * distortion loss over a latent corpus.
#pragma once

#include <string>

#include "hqs/codec.hpp"

namespace hqs {

// lambda defaults to lambda_base * 2^(l - L) per layer. The surrogate noise
// model replaces quantization by additive uniform noise on the step-scaled
// representation; exact mode runs the real nested pipeline.
struct LossConfig {
  std::vector<double> lambda;  // per layer; empty -> default schedule
  double lambda_base = 0.2;
  bool exact = false;
  double adjust_threshold = 0.3;  // exact-mode boundary adjustment
  std::uint64_t noise_seed = 0x9a7e;
};

std::vector<double> default_lambda(int layers, double base);

struct LossReport {
  std::vector<double> rate;        // bits per component through each layer
  std::vector<double> distortion;  // latent-domain MSE at each layer
  double total = 0.0;
};

// Rate term for one layer: mean bits per component (normalized by the total
// component count) to reach layer l. Surrogate mode models the step-scaled
// noisy representation against the scaled Gaussian; exact mode charges the
// ideal rate of the symbols actually coded at layers 1..l.
double rate_term(const LatentTensor& latent, const GaussianParams& params,
                 const StepSchedule& schedule, const std::vector<SelectionMask>& masks,
                 int layer, const LossConfig& cfg);

// Mean squared latent error at layer l over all components; unselected
// components reconstruct to mu.
double distortion_term(const LatentTensor& latent, const GaussianParams& params,
                       const StepSchedule& schedule, const std::vector<SelectionMask>& masks,
                       int layer, const LossConfig& cfg);

// Sum of rate + lambda*distortion over layers, masks derived from the
// schedule's gamma entries.
LossReport total_loss(const LatentTensor& latent, const GaussianParams& params,
                      const StepSchedule& schedule, const LossConfig& cfg);

struct OptConfig {
  LossConfig loss;
  int sweeps = 3;
  long max_evals = 60000;
  bool optimize_inv = true;
  bool optimize_gamma = true;
  double inv_band = 0.25;  // inverse step stays within step * [1-band, 1+band]
};

struct OptResult {
  StepSchedule schedule;
  LossReport report;       // surrogate report at the returned schedule
  long evals = 0;
  bool budget_exhausted = false;
  std::string diagnostic;
};

// Coordinate descent in log-step space (scan + golden-section per
// coordinate); monotonicity is guaranteed by optimizing non-negative
// per-layer log-step decrements. Deterministic for a fixed config.
// Initialization is the trit ladder below, so the returned loss never
// exceeds the handcrafted baseline's.
OptResult optimize_schedule(const LatentTensor& latent, const GaussianParams& params,
                            int layers, const OptConfig& cfg);

// Handcrafted baseline: global ladder step(l) = s * 3^(L-l) with s chosen so
// layer 1 holds exactly three intervals over the data, no selection.
StepSchedule baseline_trit_for(const LatentTensor& latent, const GaussianParams& params,
                               int layers);

}  // namespace hqs

#include "hqs/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "hqs/gauss.hpp"
#include "hqs/parallel.hpp"
#include "hqs/rng.hpp"

namespace hqs {

std::vector<double> default_lambda(int layers, double base) {
  std::vector<double> lam(layers);
  for (int l = 1; l <= layers; ++l) lam[l - 1] = base * std::pow(2.0, double(l - layers));
  return lam;
}

namespace {

constexpr std::size_t kGrain = 4096;

std::vector<double> make_noise(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<double> u(count);
  for (double& v : u) v = rng.next_unit() - 0.5;
  return u;
}

std::vector<SelectionMask> masks_from_schedule(const GaussianParams& params,
                                               const StepSchedule& schedule) {
  ImportanceMap im = importance_from_sigma(params);
  std::vector<SelectionMask> masks;
  SelectionMask prev;
  prev.layer = 0;
  prev.bits.assign(params.shape.volume(), 0);
  for (int l = 1; l <= schedule.layers; ++l) {
    auto raw = adjust_and_binarize(im, schedule.gamma[l - 1]);
    SelectionMask m = inclusive_mask(prev, raw);
    masks.push_back(m);
    prev = std::move(m);
  }
  return masks;
}

double surrogate_rate(const LatentTensor& latent, const GaussianParams& params,
                      const StepSchedule& schedule, const SelectionMask& mask, int layer,
                      const std::vector<double>& noise_row) {
  const std::size_t n = latent.values.size();
  double bits = parallel_sum(n, kGrain, [&](std::size_t i) {
    if (!mask.bits[i]) return 0.0;
    int c = int(latent.shape.channel_of(i));
    double step = schedule.step_at(layer, c);
    double scaled_sigma = params.sigma[i] / step;
    double scaled_mu = params.mu[i] / step;
    double noisy = latent.values[i] / step + noise_row[i];
    double p = gaussian_cdf(noisy + 0.5 - scaled_mu, scaled_sigma) -
               gaussian_cdf(noisy - 0.5 - scaled_mu, scaled_sigma);
    return -std::log2(std::max(p, 1e-300));
  });
  return bits / double(n);
}

double surrogate_distortion(const LatentTensor& latent, const GaussianParams& params,
                            const StepSchedule& schedule, const SelectionMask& mask,
                            int layer, const std::vector<double>& noise_row) {
  const std::size_t n = latent.values.size();
  double err = parallel_sum(n, kGrain, [&](std::size_t i) {
    double e;
    if (mask.bits[i]) {
      int c = int(latent.shape.channel_of(i));
      double step = schedule.step_at(layer, c);
      double inv = schedule.inv_step_at(layer, c);
      double noisy = latent.values[i] / step + noise_row[i];
      e = latent.values[i] - noisy * inv;
    } else {
      e = latent.values[i] - params.mu[i];
    }
    return e * e;
  });
  return err / double(n);
}

struct ExactEval {
  std::vector<double> rate;        // cumulative bits per component
  std::vector<double> distortion;  // finalized latent MSE per layer
};

ExactEval exact_eval(const LatentTensor& latent, const GaussianParams& params,
                     const StepSchedule& schedule, double adjust_threshold) {
  EncodeConfig cfg;
  cfg.adjust_threshold = adjust_threshold;
  CodecTrace trace;
  encode(latent, params, schedule, cfg, &trace);

  const std::size_t n = latent.values.size();
  ExactEval out;
  out.rate.resize(schedule.layers);
  out.distortion.resize(schedule.layers);
  double cum_bits = 0.0;
  StepSchedule canon = schedule;
  canonicalize(canon);
  GaussianParams canon_params{latent.shape, params.mu, params.sigma};
  canon_f32(canon_params.mu);
  canon_f32(canon_params.sigma);
  for (int l = 1; l <= schedule.layers; ++l) {
    cum_bits += trace.ideal_bits[l - 1];
    out.rate[l - 1] = cum_bits / double(n);
    UnbiasedLatent recon{latent.shape, trace.recon_by_layer[l]};
    InterpolatedSteps steps = interpolate_delta(canon, double(l));
    LatentTensor final_l = finalize(recon, canon_params, steps.step, steps.inv_step);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = latent.values[i] - final_l.values[i];
      err += d * d;
    }
    out.distortion[l - 1] = err / double(n);
  }
  return out;
}

void check_loss_inputs(const LatentTensor& latent, const GaussianParams& params,
                       const StepSchedule& schedule, const std::vector<SelectionMask>& masks,
                       int layer) {
  validate(latent);
  validate(params);
  validate_schedule(schedule);
  if (!(latent.shape == params.shape)) throw StructuralError("loss term shape mismatch");
  if (layer < 1 || layer > schedule.layers) throw StructuralError("loss layer out of range");
  if (masks.size() != std::size_t(schedule.layers))
    throw StructuralError("loss mask chain size mismatch");
}

}  // namespace

double rate_term(const LatentTensor& latent, const GaussianParams& params,
                 const StepSchedule& schedule, const std::vector<SelectionMask>& masks,
                 int layer, const LossConfig& cfg) {
  check_loss_inputs(latent, params, schedule, masks, layer);
  if (cfg.exact) {
    return exact_eval(latent, params, schedule, cfg.adjust_threshold).rate[layer - 1];
  }
  const std::size_t n = latent.values.size();
  auto noise = make_noise(cfg.noise_seed + std::uint64_t(layer), n);
  return surrogate_rate(latent, params, schedule, masks[layer - 1], layer, noise);
}

double distortion_term(const LatentTensor& latent, const GaussianParams& params,
                       const StepSchedule& schedule, const std::vector<SelectionMask>& masks,
                       int layer, const LossConfig& cfg) {
  check_loss_inputs(latent, params, schedule, masks, layer);
  if (cfg.exact) {
    return exact_eval(latent, params, schedule, cfg.adjust_threshold).distortion[layer - 1];
  }
  const std::size_t n = latent.values.size();
  auto noise = make_noise(cfg.noise_seed + std::uint64_t(layer), n);
  return surrogate_distortion(latent, params, schedule, masks[layer - 1], layer, noise);
}

LossReport total_loss(const LatentTensor& latent, const GaussianParams& params,
                      const StepSchedule& schedule, const LossConfig& cfg) {
  validate(latent);
  validate(params);
  validate_schedule(schedule);
  const int layers = schedule.layers;
  std::vector<double> lambda =
      cfg.lambda.empty() ? default_lambda(layers, cfg.lambda_base) : cfg.lambda;
  if (lambda.size() != std::size_t(layers))
    throw StructuralError("lambda list size does not match layer count");

  LossReport report;
  report.rate.resize(layers);
  report.distortion.resize(layers);
  if (cfg.exact) {
    ExactEval ev = exact_eval(latent, params, schedule, cfg.adjust_threshold);
    report.rate = ev.rate;
    report.distortion = ev.distortion;
  } else {
    auto masks = masks_from_schedule(params, schedule);
    const std::size_t n = latent.values.size();
    for (int l = 1; l <= layers; ++l) {
      auto noise = make_noise(cfg.noise_seed + std::uint64_t(l), n);
      report.rate[l - 1] = surrogate_rate(latent, params, schedule, masks[l - 1], l, noise);
      report.distortion[l - 1] =
          surrogate_distortion(latent, params, schedule, masks[l - 1], l, noise);
    }
  }
  report.total = 0.0;
  for (int l = 0; l < layers; ++l)
    report.total += report.rate[l] + lambda[l] * report.distortion[l];
  return report;
}

StepSchedule baseline_trit_for(const LatentTensor& latent, const GaussianParams& params,
                               int layers) {
  UnbiasedLatent unbiased = center(latent, params);
  double max_abs = 0.0;
  for (double v : unbiased.values) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0) max_abs = 1.0;
  double finest = 2.0 * max_abs / std::pow(3.0, double(layers));
  return trit_schedule(layers, int(latent.shape.channels), finest);
}

namespace {

// Free parameters: per-channel log step at layer 1, non-negative per-layer
// log decrements (monotonicity by construction), per-layer mask exponent and
// per-(layer,channel) inverse-step ratio.
struct Params {
  std::vector<double> log_base;              // [channel]
  std::vector<std::vector<double>> dec;      // [channel][layer-2] for layers 2..L
  std::vector<double> gamma;                 // [layer]
  std::vector<std::vector<double>> inv_ratio;  // [layer-1][channel]
  int layers = 0;
  int channels = 0;

  StepSchedule materialize() const {
    StepSchedule s;
    s.layers = layers;
    s.channels = channels;
    s.step.resize(std::size_t(layers) * channels);
    s.inv_step.resize(s.step.size());
    s.gamma = gamma;
    for (int c = 0; c < channels; ++c) {
      double log_step = log_base[c];
      for (int l = 1; l <= layers; ++l) {
        if (l >= 2) log_step -= dec[c][l - 2];
        double step = std::exp(log_step);
        s.step_at(l, c) = step;
        s.inv_step_at(l, c) = step * inv_ratio[l - 1][c];
      }
    }
    return s;
  }
};

// Surrogate loss with per-layer caching: a coordinate that only touches
// layers >= l0 reuses the cached prefix.
class SurrogateLoss {
 public:
  SurrogateLoss(const LatentTensor& latent, const GaussianParams& params, int layers,
                const LossConfig& cfg)
      : latent_(latent), params_(params), layers_(layers) {
    lambda_ = cfg.lambda.empty() ? default_lambda(layers, cfg.lambda_base) : cfg.lambda;
    if (lambda_.size() != std::size_t(layers))
      throw StructuralError("lambda list size does not match layer count");
    im_ = importance_from_sigma(params);
    const std::size_t n = latent.values.size();
    noise_.resize(layers);
    for (int l = 0; l < layers; ++l)
      noise_[l] = make_noise(cfg.noise_seed + std::uint64_t(l + 1), n);
    accepted_rate_.assign(layers, 0.0);
    accepted_dist_.assign(layers, 0.0);
    scratch_rate_.assign(layers, 0.0);
    scratch_dist_.assign(layers, 0.0);
  }

  // Total loss for the candidate; layers below from_layer reuse the accepted
  // cache. Call commit() after deciding to keep the candidate.
  double eval(const Params& p, int from_layer) {
    StepSchedule s = p.materialize();
    SelectionMask mask;
    mask.layer = 0;
    mask.bits.assign(latent_.values.size(), 0);
    double total = 0.0;
    ++evals_;
    for (int l = 1; l <= layers_; ++l) {
      if (l < from_layer) {
        // The mask chain still has to be threaded through skipped layers.
        auto raw = adjust_and_binarize(im_, s.gamma[l - 1]);
        mask = inclusive_mask(mask, raw);
        scratch_rate_[l - 1] = accepted_rate_[l - 1];
        scratch_dist_[l - 1] = accepted_dist_[l - 1];
      } else {
        auto raw = adjust_and_binarize(im_, s.gamma[l - 1]);
        mask = inclusive_mask(mask, raw);
        scratch_rate_[l - 1] = surrogate_rate(latent_, params_, s, mask, l, noise_[l - 1]);
        scratch_dist_[l - 1] =
            surrogate_distortion(latent_, params_, s, mask, l, noise_[l - 1]);
      }
      total += scratch_rate_[l - 1] + lambda_[l - 1] * scratch_dist_[l - 1];
    }
    return total;
  }

  void commit() {
    accepted_rate_ = scratch_rate_;
    accepted_dist_ = scratch_dist_;
  }

  LossReport report(const Params& p) {
    double total = eval(p, 1);
    LossReport r;
    r.rate = scratch_rate_;
    r.distortion = scratch_dist_;
    r.total = total;
    return r;
  }

  long evals() const { return evals_; }

 private:
  const LatentTensor& latent_;
  const GaussianParams& params_;
  int layers_;
  std::vector<double> lambda_;
  ImportanceMap im_;
  std::vector<std::vector<double>> noise_;
  std::vector<double> accepted_rate_, accepted_dist_;
  std::vector<double> scratch_rate_, scratch_dist_;
  long evals_ = 0;
};

struct LineResult {
  double x = 0.0;
  double loss = 0.0;
};

// Coarse scan over [lo, hi] (plus the current point) followed by a
// golden-section refinement of the best bracket.
template <class F>
LineResult line_search(F&& f, double current_x, double current_loss, double lo, double hi,
                       int scan_points, int golden_iters) {
  LineResult best{current_x, current_loss};
  std::vector<double> xs;
  xs.reserve(scan_points);
  for (int i = 0; i < scan_points; ++i)
    xs.push_back(lo + (hi - lo) * double(i) / double(scan_points - 1));
  int best_scan = -1;
  for (int i = 0; i < scan_points; ++i) {
    double v = f(xs[i]);
    if (v < best.loss) {
      best = {xs[i], v};
      best_scan = i;
    }
  }
  if (best_scan >= 0) {
    double a = xs[std::max(0, best_scan - 1)];
    double b = xs[std::min(scan_points - 1, best_scan + 1)];
    const double phi = 0.6180339887498949;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < golden_iters; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = f(x2);
      }
      if (f1 < best.loss) best = {x1, f1};
      if (f2 < best.loss) best = {x2, f2};
    }
  }
  return best;
}

}  // namespace

OptResult optimize_schedule(const LatentTensor& latent, const GaussianParams& params,
                            int layers, const OptConfig& cfg) {
  validate(latent);
  validate(params);
  if (layers < 1) throw StructuralError("optimize_schedule requires layers >= 1");
  if (!(latent.shape == params.shape))
    throw StructuralError("optimize_schedule shape mismatch");

  const int channels = int(latent.shape.channels);
  StepSchedule init = baseline_trit_for(latent, params, layers);

  Params p;
  p.layers = layers;
  p.channels = channels;
  p.log_base.assign(channels, std::log(init.step_at(1, 0)));
  p.dec.assign(channels, std::vector<double>(std::max(0, layers - 1), std::log(3.0)));
  p.gamma = init.gamma;
  p.inv_ratio.assign(layers, std::vector<double>(channels, 1.0));

  SurrogateLoss loss(latent, params, layers, cfg.loss);
  double best = loss.eval(p, 1);
  loss.commit();
  const double init_loss = best;

  bool exhausted = false;
  auto budget_left = [&] {
    if (loss.evals() < cfg.max_evals) return true;
    exhausted = true;
    return false;
  };

  // Candidate mask exponents: all-pass plus a log-spaced sweep of the
  // selective range.
  std::vector<double> gamma_grid{kAllPassGamma};
  for (int i = 0; i <= 24; ++i)
    gamma_grid.push_back(0.05 * std::pow(20.0 / 0.05, double(i) / 24.0));

  const double dec_hi = std::log(32.0);
  for (int sweep = 0; sweep < cfg.sweeps && budget_left(); ++sweep) {
    // Layer-1 base step per channel.
    for (int c = 0; c < channels && budget_left(); ++c) {
      double lo = p.log_base[c] - std::log(512.0);
      double hi = p.log_base[c] + std::log(16.0);
      auto f = [&](double x) {
        Params q = p;
        q.log_base[c] = x;
        return loss.eval(q, 1);
      };
      LineResult r = line_search(f, p.log_base[c], best, lo, hi, 17, 28);
      if (r.loss < best) {
        p.log_base[c] = r.x;
        best = loss.eval(p, 1);
        loss.commit();
      }
    }
    // Per-layer log decrements (keep steps non-increasing).
    for (int l = 2; l <= layers && budget_left(); ++l) {
      for (int c = 0; c < channels && budget_left(); ++c) {
        auto f = [&](double x) {
          Params q = p;
          q.dec[c][l - 2] = x;
          return loss.eval(q, l);
        };
        LineResult r = line_search(f, p.dec[c][l - 2], best, 0.0, dec_hi, 13, 24);
        if (r.loss < best) {
          p.dec[c][l - 2] = r.x;
          best = loss.eval(p, l);
          loss.commit();
        }
      }
    }
    // Mask exponents.
    if (cfg.optimize_gamma) {
      for (int l = 1; l <= layers && budget_left(); ++l) {
        double best_gamma = p.gamma[l - 1];
        double best_local = best;
        for (double g : gamma_grid) {
          Params q = p;
          q.gamma[l - 1] = g;
          double v = loss.eval(q, l);
          if (v < best_local) {
            best_local = v;
            best_gamma = g;
          }
        }
        if (best_local < best) {
          p.gamma[l - 1] = best_gamma;
          best = loss.eval(p, l);
          loss.commit();
        }
      }
    }
    // Inverse-step ratios inside the allowed band.
    if (cfg.optimize_inv) {
      for (int l = 1; l <= layers && budget_left(); ++l) {
        for (int c = 0; c < channels && budget_left(); ++c) {
          auto f = [&](double x) {
            Params q = p;
            q.inv_ratio[l - 1][c] = x;
            return loss.eval(q, l);
          };
          LineResult r = line_search(f, p.inv_ratio[l - 1][c], best, 1.0 - cfg.inv_band,
                                     1.0 + cfg.inv_band, 9, 20);
          if (r.loss < best) {
            p.inv_ratio[l - 1][c] = r.x;
            best = loss.eval(p, l);
            loss.commit();
          }
        }
      }
    }
  }

  OptResult out;
  out.schedule = p.materialize();
  canonicalize(out.schedule);
  validate_schedule(out.schedule);
  out.report = loss.report(p);
  out.evals = loss.evals();
  out.budget_exhausted = exhausted;
  if (exhausted)
    out.diagnostic = "evaluation budget exhausted; returning best schedule so far";
  if (out.report.total > init_loss)
    throw InternalError("optimizer regressed past its initialization");
  return out;
}

}  // namespace hqs

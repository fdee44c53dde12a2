#include <doctest.h>

#include <cmath>

#include "hqs/gauss.hpp"
#include "hqs/optimizer.hpp"
#include "test_util.hpp"

using namespace hqs;

namespace {

std::vector<SelectionMask> all_pass_masks(Shape shape, int layers) {
  std::vector<SelectionMask> masks(layers);
  for (int l = 0; l < layers; ++l) {
    masks[l].layer = l + 1;
    masks[l].bits.assign(shape.volume(), 1);
  }
  return masks;
}

StepSchedule flat_schedule(int layers, int channels, double step) {
  StepSchedule out;
  out.layers = layers;
  out.channels = channels;
  out.step.assign(std::size_t(layers) * channels, step);
  out.inv_step = out.step;
  out.gamma.assign(layers, kAllPassGamma);
  return out;
}

}  // namespace

TEST_CASE("default_lambda follows the doubling ladder") {
  auto lam = default_lambda(8, 0.2);
  CHECK(lam[7] == doctest::Approx(0.2));
  CHECK(lam[0] == doctest::Approx(0.2 / 128.0));
  for (int l = 1; l < 8; ++l) CHECK(lam[l] == doctest::Approx(2.0 * lam[l - 1]));
}

TEST_CASE("an empty mask leaves the distortion at the variance around mu") {
  SourceConfig sc;
  sc.shape = Shape{1, 100, 100};
  sc.sigma_lo = sc.sigma_hi = 2.0;
  sc.seed = 81;
  auto s = sample_source(sc);
  StepSchedule sched = flat_schedule(1, 1, 1.0);
  std::vector<SelectionMask> masks(1);
  masks[0].layer = 1;
  masks[0].bits.assign(sc.shape.volume(), 0);
  LossConfig cfg;
  double d = distortion_term(s.latent, s.params, sched, masks, 1, cfg);
  double var = 0.0;
  for (std::size_t i = 0; i < s.latent.values.size(); ++i) {
    double e = s.latent.values[i] - s.params.mu[i];
    var += e * e;
  }
  var /= double(s.latent.values.size());
  CHECK(d == doctest::Approx(var).epsilon(1e-12));
}

TEST_CASE("exact-mode distortion vanishes as the step shrinks") {
  SourceConfig sc;
  sc.shape = Shape{1, 40, 40};
  sc.sigma_lo = sc.sigma_hi = 1.0;
  sc.seed = 82;
  auto s = sample_source(sc);
  LossConfig cfg;
  cfg.exact = true;
  auto masks = all_pass_masks(sc.shape, 1);
  double coarse = distortion_term(s.latent, s.params, flat_schedule(1, 1, 4.0), masks, 1, cfg);
  double fine = distortion_term(s.latent, s.params, flat_schedule(1, 1, 0.05), masks, 1, cfg);
  CHECK(fine < coarse / 100.0);
  CHECK(fine < 1e-3);
}

TEST_CASE("exact-mode distortion matches the classical uniform-quantizer value") {
  // Uniform source on [-0.5, 0.5) quantized with step 1 collapses to a single
  // interval with midpoint 0, so the error is the source variance 1/12.
  Shape shape{1, 200, 500};
  Rng rng(83);
  LatentTensor latent(shape);
  GaussianParams params;
  params.shape = shape;
  params.mu.assign(shape.volume(), 0.0);
  params.sigma.assign(shape.volume(), 1.0);
  for (auto& v : latent.values) v = canon_f32(rng.next_uniform(-0.5, 0.5));
  LossConfig cfg;
  cfg.exact = true;
  auto masks = all_pass_masks(shape, 1);
  double d = distortion_term(latent, params, flat_schedule(1, 1, 1.0), masks, 1, cfg);
  CHECK(d == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("surrogate rate matches the convolved-model quadrature") {
  // sigma/step = 1, mu = 0: the expected code length is the differential
  // entropy of the Gaussian convolved with unit uniform noise.
  SourceConfig sc;
  sc.shape = Shape{1, 2000, 1000};
  sc.sigma_lo = sc.sigma_hi = 1.0;
  sc.seed = 84;
  auto s = sample_source(sc);
  StepSchedule sched = flat_schedule(1, 1, 1.0);
  auto masks = all_pass_masks(sc.shape, 1);
  LossConfig cfg;
  double r = rate_term(s.latent, s.params, sched, masks, 1, cfg);

  auto density = [](double t) {
    return gaussian_cdf(t + 0.5, 1.0) - gaussian_cdf(t - 0.5, 1.0);
  };
  double oracle = 0.0;
  const double lo = -10.0, hi = 10.0;
  const int steps = 200000;
  const double dx = (hi - lo) / steps;
  for (int i = 0; i <= steps; ++i) {
    double t = lo + i * dx;
    double p = density(t);
    double f = p > 0 ? -p * std::log2(p) : 0.0;
    double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    oracle += w * f;
  }
  oracle *= dx;
  CHECK(r == doctest::Approx(oracle).epsilon(2e-3));
}

TEST_CASE("very coarse steps drive the rate to zero") {
  SourceConfig sc;
  sc.shape = Shape{1, 30, 30};
  sc.sigma_lo = sc.sigma_hi = 1.0;
  sc.seed = 85;
  auto s = sample_source(sc);
  auto masks = all_pass_masks(sc.shape, 1);
  LossConfig cfg;
  double r = rate_term(s.latent, s.params, flat_schedule(1, 1, 500.0), masks, 1, cfg);
  CHECK(r < 0.02);
  cfg.exact = true;
  double rx = rate_term(s.latent, s.params, flat_schedule(1, 1, 500.0), masks, 1, cfg);
  CHECK(rx < 0.02);
}

TEST_CASE("surrogate and exact rates agree on the trit ladder") {
  SourceConfig sc;
  sc.shape = Shape{1, 400, 300};
  sc.sigma_lo = sc.sigma_hi = 1.0;
  sc.seed = 86;
  auto s = sample_source(sc);
  StepSchedule sched = baseline_trit_for(s.latent, s.params, 4);
  auto masks = all_pass_masks(sc.shape, 4);
  for (int l = 2; l <= 4; ++l) {
    LossConfig cfg;
    double sur = rate_term(s.latent, s.params, sched, masks, l, cfg);
    cfg.exact = true;
    double ex = rate_term(s.latent, s.params, sched, masks, l, cfg);
    CHECK(std::fabs(sur - ex) / ex < 0.05);
  }
}

TEST_CASE("total_loss sums the per-layer terms with the lambda ladder") {
  SourceConfig sc;
  sc.shape = Shape{2, 12, 12};
  sc.sigma_lo = 0.5;
  sc.sigma_hi = 2.0;
  sc.seed = 87;
  auto s = sample_source(sc);
  StepSchedule sched = baseline_trit_for(s.latent, s.params, 3);
  LossConfig cfg;
  cfg.lambda = {0.0, 0.0, 0.0};
  LossReport r0 = total_loss(s.latent, s.params, sched, cfg);
  double rate_sum = 0.0;
  for (double r : r0.rate) rate_sum += r;
  CHECK(r0.total == doctest::Approx(rate_sum));

  cfg.lambda = {0.1, 0.2, 0.4};
  LossReport r1 = total_loss(s.latent, s.params, sched, cfg);
  double expect = 0.0;
  for (int l = 0; l < 3; ++l) expect += r1.rate[l] + cfg.lambda[l] * r1.distortion[l];
  CHECK(r1.total == doctest::Approx(expect));
  CHECK(r1.rate == r0.rate);
}

TEST_CASE("exact-mode loss terms match the codec's own measurements") {
  SourceConfig sc;
  sc.shape = Shape{2, 16, 16};
  sc.sigma_lo = 0.3;
  sc.sigma_hi = 3.0;
  sc.seed = 88;
  auto s = sample_source(sc);
  StepSchedule sched = baseline_trit_for(s.latent, s.params, 4);
  LossConfig cfg;
  cfg.exact = true;
  cfg.adjust_threshold = 0.3;
  LossReport report = total_loss(s.latent, s.params, sched, cfg);

  EncodeConfig ecfg;
  ecfg.adjust_threshold = 0.3;
  Container c = encode(s.latent, s.params, sched, ecfg);
  auto rows = measure(c, s.latent, {1.0, 2.0, 3.0, 4.0});
  const double n = double(sc.shape.volume());
  for (int l = 0; l < 4; ++l) {
    CHECK(report.distortion[l] == doctest::Approx(rows[l].msqe).epsilon(1e-9));
    CHECK(report.rate[l] == doctest::Approx(rows[l].ideal_bits_cum / n).epsilon(1e-9));
  }
}

TEST_CASE("optimize_schedule descends from the trit initialization") {
  SourceConfig sc;
  sc.shape = Shape{2, 16, 16};
  sc.sigma_lo = 0.2;
  sc.sigma_hi = 5.0;
  sc.seed = 89;
  auto s = sample_source(sc);
  OptConfig cfg;
  cfg.sweeps = 1;
  cfg.max_evals = 4000;
  OptResult r = optimize_schedule(s.latent, s.params, 3, cfg);
  CHECK_NOTHROW(validate_schedule(r.schedule));

  StepSchedule init = baseline_trit_for(s.latent, s.params, 3);
  LossReport init_report = total_loss(s.latent, s.params, init, cfg.loss);
  LossReport final_report = total_loss(s.latent, s.params, r.schedule, cfg.loss);
  CHECK(final_report.total <= init_report.total);
  // Deterministic for a fixed config.
  OptResult r2 = optimize_schedule(s.latent, s.params, 3, cfg);
  CHECK(r2.schedule.step == r.schedule.step);
  CHECK(r2.schedule.gamma == r.schedule.gamma);
}

TEST_CASE("smaller-sigma channels learn relatively coarser steps") {
  // Two channels with a 10x sigma ratio: the low-sigma channel carries less
  // information per component, so its optimal step is larger relative to its
  // sigma. Verified against independent per-channel grid oracles.
  SourceConfig sc;
  sc.shape = Shape{2, 48, 48};
  sc.sigma_lo = 0.3;
  sc.sigma_hi = 3.0;
  sc.sigma_mode = SourceConfig::SigmaMode::PerChannel;
  sc.seed = 91;
  auto s = sample_source(sc);

  OptConfig cfg;
  cfg.sweeps = 2;
  cfg.optimize_inv = false;
  cfg.optimize_gamma = false;
  cfg.loss.lambda = {0.2};
  OptResult r = optimize_schedule(s.latent, s.params, 1, cfg);
  double rel_small = r.schedule.step_at(1, 0) / 0.3;
  double rel_big = r.schedule.step_at(1, 1) / 3.0;
  CHECK(rel_small > rel_big);

  // Per-channel grid oracle: the loss separates across channels, so each
  // channel's optimum can be found independently.
  auto channel_best = [&](int channel) {
    Shape ch_shape{1, sc.shape.height, sc.shape.width};
    LatentTensor lat(ch_shape);
    GaussianParams par;
    par.shape = ch_shape;
    std::size_t plane = ch_shape.volume();
    lat.values.assign(s.latent.values.begin() + channel * plane,
                      s.latent.values.begin() + (channel + 1) * plane);
    par.mu.assign(s.params.mu.begin() + channel * plane,
                  s.params.mu.begin() + (channel + 1) * plane);
    par.sigma.assign(s.params.sigma.begin() + channel * plane,
                     s.params.sigma.begin() + (channel + 1) * plane);
    LossConfig lc;
    lc.lambda = {0.2};
    StepSchedule probe = flat_schedule(1, 1, 1.0);
    double best_loss = 1e300, best_step = 0.0;
    for (double x = std::log(0.01); x <= std::log(400.0); x += 5e-3) {
      probe.step[0] = probe.inv_step[0] = std::exp(x);
      LossReport rep = total_loss(lat, par, probe, lc);
      if (rep.total < best_loss) {
        best_loss = rep.total;
        best_step = probe.step[0];
      }
    }
    return best_step;
  };
  CHECK(channel_best(0) / 0.3 > channel_best(1) / 3.0);
}

TEST_CASE("surrogate losses are identical under any thread cap") {
  SourceConfig sc;
  sc.shape = Shape{2, 32, 32};
  sc.sigma_lo = 0.2;
  sc.sigma_hi = 4.0;
  sc.seed = 92;
  auto s = sample_source(sc);
  StepSchedule sched = baseline_trit_for(s.latent, s.params, 4);
  LossConfig cfg;
  setenv("HQSTREAM_THREADS", "1", 1);
  LossReport one = total_loss(s.latent, s.params, sched, cfg);
  setenv("HQSTREAM_THREADS", "7", 1);
  LossReport many = total_loss(s.latent, s.params, sched, cfg);
  unsetenv("HQSTREAM_THREADS");
  CHECK(one.total == many.total);
  CHECK(one.rate == many.rate);
  CHECK(one.distortion == many.distortion);
}

TEST_CASE("optimizer honors its evaluation budget") {
  SourceConfig sc;
  sc.shape = Shape{1, 8, 8};
  sc.sigma_lo = sc.sigma_hi = 1.0;
  sc.seed = 90;
  auto s = sample_source(sc);
  OptConfig cfg;
  cfg.max_evals = 40;
  OptResult r = optimize_schedule(s.latent, s.params, 4, cfg);
  CHECK(r.budget_exhausted);
  CHECK(!r.diagnostic.empty());
  CHECK_NOTHROW(validate_schedule(r.schedule));
}

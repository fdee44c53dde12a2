#include <doctest.h>

#include <cmath>

#include "hqs/gauss.hpp"
#include "hqs/pmf.hpp"
#include "test_util.hpp"

using namespace hqs;

namespace {

double phi(double x) { return 0.5 + 0.5 * std::erf(x / std::sqrt(2.0)); }

BoundarySet hand_bounds(std::vector<double> edges) {
  BoundarySet bs;
  bs.edges = std::move(edges);
  bs.k_offset = 0;
  bs.valid_count = 0;
  for (int kk = 0; kk < bs.size(); ++kk)
    if (bs.width(kk) > 0.0) ++bs.valid_count;
  bs.step_used = 1.0;
  return bs;
}

}  // namespace

TEST_CASE("gaussian_cdf hits the standard anchors") {
  CHECK(gaussian_cdf(0.0, 1.0) == 0.5);
  CHECK(gaussian_cdf(0.0, 7.3) == 0.5);
  CHECK(gaussian_cdf(1.959964 * 2.5, 2.5) == doctest::Approx(0.975).epsilon(1e-6));
  for (double x : {0.1, 0.9, 2.0, 5.0}) {
    CHECK(std::fabs(gaussian_cdf(-x, 1.0) - (1.0 - gaussian_cdf(x, 1.0))) < 1e-12);
  }
  // clamped tails
  CHECK(gaussian_cdf(9.0, 1.0) == gaussian_cdf(8.0, 1.0));
  CHECK(gaussian_cdf(-9.0, 1.0) == gaussian_cdf(-8.0, 1.0));
}

TEST_CASE("interval_pmf reproduces the CDF-ratio worked example") {
  // Parent [5,15], recon 10, step 4 puts boundaries at 5, 8, 12, 15.
  IntervalState parent{5.0, 15.0, 10.0};
  BoundarySet bs = compute_boundaries(parent, 4.0, 5);
  SubIntervalPMF pmf = interval_pmf(bs, 10.0);
  double expected = (phi(0.8) - phi(0.5)) / (phi(1.5) - phi(0.5));
  // slot for the [5,8) sub-interval
  int kk = quantize(6.0, bs);
  CHECK(bs.edges[kk] == 5.0);
  CHECK(pmf.prob_of_kk(kk) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("symmetric intervals get symmetric, unimodal probabilities") {
  IntervalState parent{-0.6, 0.6, 0.0};
  BoundarySet bs = compute_boundaries(parent, 0.4, covering_k_count(1.2, 0.4));
  REQUIRE(bs.valid_count == 3);
  SubIntervalPMF pmf = interval_pmf(bs, 1.0);
  REQUIRE(pmf.support_size() == 3);
  CHECK(pmf.probs[1] > pmf.probs[0]);
  CHECK(pmf.probs[1] > pmf.probs[2]);
  CHECK(pmf.probs[0] == doctest::Approx(pmf.probs[2]).epsilon(1e-12));
}

TEST_CASE("interval PMFs sum to one over many random boundary sets") {
  Rng rng(17);
  for (int trial = 0; trial < 100000; ++trial) {
    double sigma = rng.next_log_uniform(0.1, 10.0);
    double half = rng.next_log_uniform(0.05, 4.0) * sigma;
    double center = rng.next_uniform(-2.0, 2.0) * sigma;
    IntervalState parent{center - half, center + half, center};
    double step = rng.next_log_uniform(0.1, 1.5) * half;
    BoundarySet bs = compute_boundaries(parent, step, covering_k_count(2 * half, step));
    SubIntervalPMF pmf = interval_pmf(bs, sigma);
    double sum = 0.0;
    for (double p : pmf.probs) sum += p;
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("PMF denominators that underflow raise a degenerate error") {
  IntervalState parent{9.0, 9.5, 9.25};
  BoundarySet bs = compute_boundaries(parent, 0.25, 3);
  CHECK_THROWS_AS(interval_pmf(bs, 1e-3), DegeneratePmfError);
}

TEST_CASE("conditional probabilities telescope to the unconditional ratio") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    double sigma = rng.next_log_uniform(0.3, 3.0);
    double value = rng.next_uniform(-2.0, 2.0) * sigma;
    IntervalState st = init_interval(1.2 * sigma, 5);
    if (std::fabs(value) >= st.hi) continue;
    double top_lo = st.lo, top_hi = st.hi;
    double chain = 1.0;
    for (int l = 0; l < 3; ++l) {
      double step = st.width() / 3.0;
      BoundarySet bs = compute_boundaries(st, step, covering_k_count(st.width(), step));
      SubIntervalPMF pmf = interval_pmf(bs, sigma);
      int kk = quantize(value, bs);
      chain *= pmf.prob_of_kk(kk);
      st = dequantize(kk, bs).child;
    }
    double unconditional = (gaussian_cdf(st.hi, sigma) - gaussian_cdf(st.lo, sigma)) /
                           (gaussian_cdf(top_hi, sigma) - gaussian_cdf(top_lo, sigma));
    CHECK(chain == doctest::Approx(unconditional).epsilon(1e-9));
  }
}

TEST_CASE("frequency tables are deterministic and exactly on the grid") {
  IntervalState parent{-2.5, 2.5, 0.0};
  BoundarySet bs = compute_boundaries(parent, 1.0, 5);
  SubIntervalPMF pmf = interval_pmf(bs, 1.3);
  FreqTable a = quantize_freqs(pmf);
  FreqTable b = quantize_freqs(pmf);
  CHECK(a.freq == b.freq);
  std::uint64_t total = 0;
  for (auto f : a.freq) {
    CHECK(f >= 1);
    total += f;
  }
  CHECK(total == kFreqTotal);
}

TEST_CASE("a certain symbol costs at most the flush bytes") {
  BoundarySet bs = hand_bounds({-1.0, 1.0});
  SubIntervalPMF pmf = interval_pmf(bs, 1.0);
  REQUIRE(pmf.support_size() == 1);
  RangeEncoder enc;
  encode_symbols({0}, {pmf}, enc);
  enc.finish();
  CHECK(enc.bytes().size() <= 8);

  RangeDecoder dec(enc.bytes());
  CHECK(decode_symbol(dec, pmf) == 0);
}

TEST_CASE("near-uniform ternary streams code close to log2(3) per symbol") {
  // Tiny intervals near the Gaussian peak have nearly equal mass.
  BoundarySet bs = hand_bounds({-0.03, -0.01, 0.01, 0.03});
  SubIntervalPMF pmf = interval_pmf(bs, 1.0);
  const int n = 10000;
  Rng rng(29);
  std::vector<int> symbols(n);
  std::vector<SubIntervalPMF> pmfs(n, pmf);
  for (int i = 0; i < n; ++i) symbols[i] = int(rng.next_u64() % 3);

  double oracle = ideal_rate(symbols, pmfs);
  CHECK(oracle == doctest::Approx(n * std::log2(3.0)).epsilon(0.01));

  RangeEncoder enc;
  encode_symbols(symbols, pmfs, enc);
  enc.finish();
  double measured_bits = 8.0 * double(enc.bytes().size());
  CHECK(measured_bits >= oracle);
  CHECK(measured_bits <= 1.02 * oracle + 64.0);

  RangeDecoder dec(enc.bytes());
  for (int i = 0; i < n; ++i) CHECK(decode_symbol(dec, pmf) == symbols[i]);
  CHECK(dec.bytes_consumed() == enc.bytes().size());
}

TEST_CASE("round trips survive randomized layered PMF sequences") {
  Rng rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SubIntervalPMF> pmfs;
    std::vector<int> symbols;
    int n = 200 + int(rng.next_u64() % 200);
    for (int i = 0; i < n; ++i) {
      double sigma = rng.next_log_uniform(0.2, 5.0);
      double half = rng.next_log_uniform(0.2, 3.0) * sigma;
      double center = rng.next_uniform(-1.5, 1.5) * sigma;
      IntervalState parent{center - half, center + half, center};
      double step = rng.next_log_uniform(0.15, 1.2) * half;
      BoundarySet bs = compute_boundaries(parent, step, covering_k_count(2 * half, step));
      SubIntervalPMF pmf = interval_pmf(bs, sigma);
      // Draw a symbol from the support, biased toward likely slots.
      double u = rng.next_unit();
      double acc = 0.0;
      int chosen = pmf.support_kk.back();
      for (int s = 0; s < pmf.support_size(); ++s) {
        acc += pmf.probs[s];
        if (u < acc) {
          chosen = pmf.support_kk[s];
          break;
        }
      }
      pmfs.push_back(std::move(pmf));
      symbols.push_back(chosen);
    }
    RangeEncoder enc;
    encode_symbols(symbols, pmfs, enc);
    enc.finish();
    RangeDecoder dec(enc.bytes());
    for (int i = 0; i < n; ++i) CHECK(decode_symbol(dec, pmfs[i]) == symbols[i]);
  }
}

TEST_CASE("coding errors are reported, not absorbed") {
  BoundarySet bs = hand_bounds({-1.0, 0.0, 1.0});
  SubIntervalPMF pmf = interval_pmf(bs, 1.0);
  RangeEncoder enc;
  CHECK_THROWS_AS(encode_symbols({5}, {pmf}, enc), StructuralError);

  // Exhausted stream: fewer bytes than the decoder needs.
  std::vector<std::uint8_t> empty;
  RangeDecoder dec(empty);
  CHECK_THROWS_AS(decode_symbol(dec, pmf), DecodeError);
}

TEST_CASE("ideal_rate matches hand-computed bit counts") {
  CHECK(ideal_rate({}, {}) == 0.0);

  BoundarySet bs = hand_bounds({-10.0, 0.0, 10.0});
  SubIntervalPMF half = interval_pmf(bs, 1.0);  // two equal halves
  REQUIRE(half.support_size() == 2);
  CHECK(half.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  std::vector<int> symbols(16, 0);
  std::vector<SubIntervalPMF> pmfs(16, half);
  CHECK(ideal_rate(symbols, pmfs) == doctest::Approx(16.0).epsilon(1e-9));

  // The worked CDF-ratio example prices at -log2 of the ratio.
  IntervalState parent{5.0, 15.0, 10.0};
  BoundarySet wb = compute_boundaries(parent, 4.0, 5);
  SubIntervalPMF pmf = interval_pmf(wb, 10.0);
  int kk = quantize(6.0, wb);
  double expected = -std::log2((phi(0.8) - phi(0.5)) / (phi(1.5) - phi(0.5)));
  CHECK(ideal_rate({kk}, {pmf}) == doctest::Approx(expected).epsilon(1e-9));

  CHECK_THROWS_AS(ideal_rate({99}, {pmf}), StructuralError);
}

#include "hqs/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hqs/gauss.hpp"

namespace hqs {

namespace {
constexpr double kProbFloor = 1.0 / double(kFreqTotal);
constexpr double kDenomGuard = 1e-290;
}  // namespace

SubIntervalPMF interval_pmf(const BoundarySet& bs, double sigma) {
  if (!(sigma > 0.0)) throw StructuralError("interval_pmf requires sigma > 0");
  const int n = bs.size();
  double denom = gaussian_cdf(bs.hi(), sigma) - gaussian_cdf(bs.lo(), sigma);
  if (!(denom > kDenomGuard))
    throw DegeneratePmfError("interval probability underflow: sigma inconsistent with bounds");

  SubIntervalPMF pmf;
  pmf.slot_of_kk.assign(n, -1);
  double sum = 0.0;
  for (int kk = 0; kk < n; ++kk) {
    if (!(bs.width(kk) > 0.0)) continue;
    double p = (gaussian_cdf(bs.edges[kk + 1], sigma) - gaussian_cdf(bs.edges[kk], sigma)) / denom;
    p = std::max(p, kProbFloor);
    pmf.slot_of_kk[kk] = int(pmf.probs.size());
    pmf.support_kk.push_back(kk);
    pmf.probs.push_back(p);
    sum += p;
  }
  if (pmf.probs.empty()) throw InternalError("boundary set has no valid sub-interval");
  for (double& p : pmf.probs) p /= sum;
  return pmf;
}

FreqTable quantize_freqs(const SubIntervalPMF& pmf) {
  const int n = pmf.support_size();
  if (n < 1) throw InternalError("empty PMF support");
  if (std::uint32_t(n) > kFreqTotal)
    throw DegeneratePmfError("PMF support exceeds the frequency grid");

  FreqTable t;
  t.freq.resize(n);
  std::vector<double> remainder(n);
  std::uint64_t assigned = 0;
  for (int i = 0; i < n; ++i) {
    double raw = pmf.probs[i] * double(kFreqTotal);
    double fl = std::floor(raw);
    t.freq[i] = std::uint32_t(fl);
    remainder[i] = raw - fl;
    assigned += t.freq[i];
  }
  // Distribute the leftover units to the largest remainders (ties to the
  // lower slot). A negative leftover can only come from FP round-up; trim
  // from the largest frequencies.
  if (assigned < kFreqTotal) {
    std::uint64_t leftover = kFreqTotal - assigned;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
      return a < b;
    });
    for (std::uint64_t j = 0; j < leftover; ++j) t.freq[order[j % n]] += 1;
  } else if (assigned > kFreqTotal) {
    std::uint64_t excess = assigned - kFreqTotal;
    while (excess > 0) {
      int big = int(std::max_element(t.freq.begin(), t.freq.end()) - t.freq.begin());
      if (t.freq[big] <= 1) throw InternalError("frequency trim underflow");
      t.freq[big] -= 1;
      --excess;
    }
  }
  // Nothing encodable may sit at zero frequency.
  for (int i = 0; i < n; ++i) {
    while (t.freq[i] == 0) {
      int big = int(std::max_element(t.freq.begin(), t.freq.end()) - t.freq.begin());
      if (t.freq[big] <= 1) throw DegeneratePmfError("cannot floor frequencies: support too large");
      t.freq[big] -= 1;
      t.freq[i] += 1;
    }
  }
  t.cum.resize(n + 1);
  t.cum[0] = 0;
  for (int i = 0; i < n; ++i) t.cum[i + 1] = t.cum[i] + t.freq[i];
  if (t.cum[n] != kFreqTotal) throw InternalError("frequency table does not sum to the grid");
  return t;
}

int FreqTable::find_slot(std::uint32_t target) const {
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  int slot = int(it - cum.begin()) - 1;
  if (slot < 0 || slot >= int(freq.size())) throw DecodeError("target outside frequency table");
  return slot;
}

void encode_symbols(const std::vector<int>& symbols_kk,
                    const std::vector<SubIntervalPMF>& pmfs, RangeEncoder& enc) {
  if (symbols_kk.size() != pmfs.size())
    throw StructuralError("symbol/PMF count mismatch");
  for (std::size_t i = 0; i < symbols_kk.size(); ++i) {
    int slot = pmfs[i].slot(symbols_kk[i]);
    if (slot < 0) throw StructuralError("symbol outside PMF support");
    FreqTable t = quantize_freqs(pmfs[i]);
    enc.encode(t.cum[slot], t.freq[slot], kFreqTotal);
  }
}

int decode_symbol(RangeDecoder& dec, const SubIntervalPMF& pmf) {
  if (dec.exhausted()) throw DecodeError("stream exhausted");
  FreqTable t = quantize_freqs(pmf);
  int slot = t.find_slot(dec.decode_target(kFreqTotal));
  dec.decode_advance(t.cum[slot], t.freq[slot]);
  return pmf.support_kk[slot];
}

double ideal_rate(const std::vector<int>& symbols_kk,
                  const std::vector<SubIntervalPMF>& pmfs) {
  if (symbols_kk.size() != pmfs.size())
    throw StructuralError("symbol/PMF count mismatch");
  double bits = 0.0;
  for (std::size_t i = 0; i < symbols_kk.size(); ++i) {
    double p = pmfs[i].prob_of_kk(symbols_kk[i]);
    if (!(p > 0.0)) throw StructuralError("zero-probability symbol in ideal_rate");
    bits -= std::log2(p);
  }
  return bits;
}

}  // namespace hqs

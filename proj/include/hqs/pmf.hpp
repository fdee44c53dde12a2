// Conditional probability model over quantization sub-intervals and its
// integer frequency quantization for the range coder.
#pragma once

#include <vector>

#include "hqs/quant.hpp"
#include "hqs/range_coder.hpp"

namespace hqs {

// Probability of each valid sub-interval of a BoundarySet, conditioned on the
// parent interval: ratios of Gaussian CDF differences. Probabilities are
// floored at 2^-16 and renormalized, so they sum to 1 within 1e-9 and no
// encodable sub-interval carries zero mass (after renormalization an entry
// can sit at most one part in 2^16 below the floor). Zero-width sub-intervals
// have probability exactly 0 and are outside the support.
struct SubIntervalPMF {
  std::vector<double> probs;    // one per support slot
  std::vector<int> support_kk;  // slot -> boundary-set index kk
  std::vector<int> slot_of_kk;  // kk -> slot, -1 outside support

  int support_size() const { return int(probs.size()); }
  // -1 when kk is not encodable.
  int slot(int kk) const {
    return kk >= 0 && kk < int(slot_of_kk.size()) ? slot_of_kk[kk] : -1;
  }
  double prob_of_kk(int kk) const {
    int s = slot(kk);
    return s < 0 ? 0.0 : probs[s];
  }
};

SubIntervalPMF interval_pmf(const BoundarySet& bs, double sigma);

// Integer frequencies over the 16-bit grid via largest-remainder
// apportionment, every slot >= 1 unit. Deterministic and order-independent,
// so encoder and decoder derive bit-identical tables from the same PMF.
struct FreqTable {
  std::vector<std::uint32_t> freq;
  std::vector<std::uint32_t> cum;  // support_size()+1 entries, cum.back() == kFreqTotal

  int find_slot(std::uint32_t target) const;
};

FreqTable quantize_freqs(const SubIntervalPMF& pmf);

// Batch coding of sub-interval indices (zero-based kk) against per-symbol
// PMFs. Throws DecodeError/StructuralError when a symbol is outside its
// PMF's support or the stream ends early.
void encode_symbols(const std::vector<int>& symbols_kk,
                    const std::vector<SubIntervalPMF>& pmfs, RangeEncoder& enc);
int decode_symbol(RangeDecoder& dec, const SubIntervalPMF& pmf);

// Sum of -log2(prob) over the symbols; errors on zero-probability symbols.
double ideal_rate(const std::vector<int>& symbols_kk,
                  const std::vector<SubIntervalPMF>& pmfs);

}  // namespace hqs

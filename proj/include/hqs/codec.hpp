// Full encode/decode orchestration: component ordering, per-layer selective
// hierarchical quantization with entropy coding into a layered container,
// fractional-layer step interpolation, and prefix truncation with exact
// encoder/decoder agreement at any component-granular cut.
#pragma once

#include <optional>
#include <string>

#include "hqs/container.hpp"
#include "hqs/pmf.hpp"
#include "hqs/selection.hpp"

namespace hqs {

struct EncodeConfig {
  double adjust_threshold = 0.3;
  // Overrides the sigma-derived importance map; also stored in the container
  // so the decoder reproduces the same masks.
  std::optional<std::vector<double>> importance;
};

// Coding order shared by encoder and decoder, derived from header data only.
// Within each layer, previously selected components come first, then newly
// added ones, both by descending sigma with ties broken by ascending flat
// index.
struct OrderPlan {
  std::vector<SelectionMask> masks;                  // one per layer
  std::vector<std::vector<std::uint32_t>> order;     // [layer-1] -> flat indices
  std::vector<std::uint32_t> first_layer;            // per comp, 1-based; 0 = never coded
};

OrderPlan plan_order(const GaussianParams& params,
                     const std::vector<SelectionMask>& masks);
OrderPlan build_plan(const ContainerHeader& header);

// Boundary set and PMF for one component at one layer, derived purely from
// shared state; identical on both coder sides.
struct SymbolContext {
  BoundarySet bounds;
  SubIntervalPMF pmf;
};
SymbolContext symbol_context(const IntervalState& state, double step,
                             double adjust_threshold, double sigma);

// Optional instrumentation filled by encode/decode for tests and reports.
struct CodecTrace {
  std::vector<std::vector<int>> symbols;            // [layer-1] kk per coded position
  std::vector<std::vector<double>> recon_by_layer;  // [layer][comp] y* state, row 0 = all zeros
  std::vector<std::vector<double>> width_by_layer;  // [layer-1][comp] interval width, 0 if uncoded
  std::vector<double> ideal_bits;                   // per layer
  std::vector<std::size_t> adjust_count;            // per layer
  std::vector<std::uint64_t> state_hash;            // per layer
  std::vector<std::vector<std::uint64_t>> byte_marks;  // [layer-1][t] coder bytes after t symbols
  OrderPlan plan;
  int k_count = 0;
};

Container encode(const LatentTensor& latent, const GaussianParams& params,
                 const StepSchedule& schedule, const EncodeConfig& cfg,
                 CodecTrace* trace = nullptr);

struct DecodeResult {
  LatentTensor reconstruction;   // final latent after inverse scaling
  UnbiasedLatent recon_unbiased; // y* reconstructions at the achieved point
  double achieved_point = 0.0;   // in [0, layers]
  std::uint64_t payload_bytes = 0;
  std::uint64_t header_bytes = 0;
};

// point in [0, L]: integer part = completed layers, fractional part = the
// fraction of the next layer's ordered components, rounded down to component
// granularity. Truncated containers clamp the achieved point.
DecodeResult decode(const Container& c, double point, CodecTrace* trace = nullptr);
// Greedy decode within a payload byte budget (8-byte segment length prefixes
// count against the budget; the header does not).
DecodeResult decode_bytes(const Container& c, std::uint64_t payload_budget,
                          CodecTrace* trace = nullptr);

// Container prefix that decodes to exactly the requested point (clamped to
// the container's extent). Truncating to the full extent is a byte-identical
// copy; truncation never re-encodes.
Container truncate(const Container& c, double point);
// Largest safely decodable prefix within the payload byte budget.
Container truncate_bytes(const Container& c, std::uint64_t payload_budget);

struct MeasureRow {
  double point = 0.0;
  double bpp = 0.0;   // payload bits per latent component
  double msqe = 0.0;  // latent-domain mean squared error
  double selection_ratio = 0.0;
  std::uint64_t header_bytes = 0;
  std::uint64_t payload_bytes = 0;
  double ideal_bits_cum = 0.0;  // model cost of the decoded symbols, in bits
};

std::vector<MeasureRow> measure(const Container& c, const LatentTensor& latent,
                                const std::vector<double>& points);

// CSV with header row point,bpp,msqe,selection_ratio,header_bytes,payload_bytes
// and 9 significant digits on floating columns.
std::string measure_csv(const std::vector<MeasureRow>& rows);

}  // namespace hqs

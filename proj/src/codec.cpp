#include "hqs/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace hqs {

namespace {

std::uint64_t fnv_mix(std::uint64_t h, const void* data, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_states(const std::vector<IntervalState>& states,
                          const std::vector<std::uint8_t>& coded) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!coded[i]) {
      std::uint8_t zero = 0;
      h = fnv_mix(h, &zero, 1);
      continue;
    }
    h = fnv_mix(h, &states[i].lo, 8);
    h = fnv_mix(h, &states[i].hi, 8);
    h = fnv_mix(h, &states[i].recon, 8);
  }
  return h;
}

}  // namespace

OrderPlan plan_order(const GaussianParams& params,
                     const std::vector<SelectionMask>& masks) {
  const std::size_t n = params.shape.volume();
  for (std::size_t l = 0; l < masks.size(); ++l) {
    if (masks[l].bits.size() != n) throw StructuralError("mask size mismatch");
    if (l > 0)
      for (std::size_t i = 0; i < n; ++i)
        if (masks[l - 1].bits[i] && !masks[l].bits[i])
          throw StructuralError("masks are not layer-inclusive");
  }

  std::vector<std::uint32_t> by_sigma(n);
  std::iota(by_sigma.begin(), by_sigma.end(), 0u);
  std::stable_sort(by_sigma.begin(), by_sigma.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (params.sigma[a] != params.sigma[b]) return params.sigma[a] > params.sigma[b];
    return a < b;
  });

  OrderPlan plan;
  plan.masks = masks;
  plan.order.resize(masks.size());
  plan.first_layer.assign(n, 0);
  for (std::size_t l = 0; l < masks.size(); ++l) {
    const auto& cur = masks[l].bits;
    const std::vector<std::uint8_t>* prev = l > 0 ? &masks[l - 1].bits : nullptr;
    auto& ord = plan.order[l];
    ord.reserve(masks[l].popcount());
    for (std::uint32_t i : by_sigma)
      if (prev && (*prev)[i]) ord.push_back(i);
    for (std::uint32_t i : by_sigma) {
      bool is_new = cur[i] && !(prev && (*prev)[i]);
      if (is_new) {
        ord.push_back(i);
        plan.first_layer[i] = std::uint32_t(l + 1);
      }
    }
  }
  return plan;
}

OrderPlan build_plan(const ContainerHeader& header) {
  GaussianParams params{header.shape, header.mu, header.sigma};
  ImportanceMap im;
  if (header.importance) {
    im.shape = header.shape;
    im.values = *header.importance;
  } else {
    im = importance_from_sigma(params);
  }
  std::vector<SelectionMask> masks;
  SelectionMask prev;
  prev.layer = 0;
  prev.bits.assign(header.shape.volume(), 0);
  for (int l = 1; l <= header.schedule.layers; ++l) {
    auto raw = adjust_and_binarize(im, header.schedule.gamma[l - 1]);
    SelectionMask m = inclusive_mask(prev, raw);
    masks.push_back(m);
    prev = std::move(m);
  }
  return plan_order(params, masks);
}

SymbolContext symbol_context(const IntervalState& state, double step,
                             double adjust_threshold, double sigma) {
  int k = covering_k_count(state.width(), step);
  SymbolContext ctx;
  ctx.bounds = compute_boundaries(state, step, k);
  ctx.bounds = adjust_boundaries(ctx.bounds, step, adjust_threshold, state);
  ctx.pmf = interval_pmf(ctx.bounds, sigma);
  return ctx;
}

namespace {

void trace_layer_snapshot(CodecTrace* trace, const std::vector<IntervalState>& states,
                          const std::vector<std::uint8_t>& coded) {
  if (!trace) return;
  const std::size_t n = states.size();
  std::vector<double> recon(n, 0.0), width(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (coded[i]) {
      recon[i] = states[i].recon;
      width[i] = states[i].width();
    }
  }
  trace->recon_by_layer.push_back(std::move(recon));
  trace->width_by_layer.push_back(std::move(width));
  trace->state_hash.push_back(hash_states(states, coded));
}

}  // namespace

Container encode(const LatentTensor& latent, const GaussianParams& params,
                 const StepSchedule& schedule, const EncodeConfig& cfg,
                 CodecTrace* trace) {
  validate(latent);
  validate(params);
  if (!(latent.shape == params.shape))
    throw StructuralError("latent/parameter shape mismatch in encode()");
  if (!(cfg.adjust_threshold >= 0.0) || cfg.adjust_threshold >= 1.0)
    throw StructuralError("adjustment threshold must lie in [0,1)");

  Container c;
  ContainerHeader& h = c.header;
  h.shape = latent.shape;
  h.schedule = schedule;
  canonicalize(h.schedule);
  validate_schedule(h.schedule);
  if (h.schedule.channels != int(latent.shape.channels))
    throw StructuralError("schedule channel count does not match latent shape");
  h.adjust_threshold = canon_f32(cfg.adjust_threshold);
  h.mu = params.mu;
  h.sigma = params.sigma;
  canon_f32(h.mu);
  canon_f32(h.sigma);
  if (cfg.importance) {
    h.importance = *cfg.importance;
    canon_f32(*h.importance);
    for (double v : *h.importance)
      if (!(v >= 0.0 && v <= 1.0))
        throw StructuralError("importance values must lie in [0,1]");
  }

  // Everything from here on runs in the f32-canonical world the decoder sees.
  std::vector<double> y = latent.values;
  canon_f32(y);
  GaussianParams canon_params{h.shape, h.mu, h.sigma};
  UnbiasedLatent unbiased = center(LatentTensor{h.shape, y}, canon_params);
  h.k_count = choose_k_range(unbiased, h.schedule);

  OrderPlan plan = build_plan(h);
  const std::size_t n = h.shape.volume();
  const int layers = h.schedule.layers;

  std::vector<IntervalState> states(n);
  std::vector<std::uint8_t> coded(n, 0);

  if (trace) {
    *trace = CodecTrace{};
    trace->plan = plan;
    trace->k_count = h.k_count;
    trace->recon_by_layer.push_back(std::vector<double>(n, 0.0));
  }

  for (int l = 1; l <= layers; ++l) {
    RangeEncoder enc;
    bool any_coded = false;
    double bits = 0.0;
    std::size_t adjusted = 0;
    std::vector<int> symbols;
    if (trace) symbols.reserve(plan.order[l - 1].size());

    for (std::uint32_t i : plan.order[l - 1]) {
      const int ch = int(h.shape.channel_of(i));
      if (!coded[i]) {
        states[i] = init_interval(h.schedule.step_at(1, ch), h.k_count);
        coded[i] = 1;
      }
      SymbolContext ctx =
          symbol_context(states[i], h.schedule.step_at(l, ch), h.adjust_threshold, h.sigma[i]);
      if (ctx.bounds.adjusted) ++adjusted;
      int kk = quantize(unbiased.values[i], ctx.bounds);
      if (ctx.pmf.support_size() > 1) {
        FreqTable t = quantize_freqs(ctx.pmf);
        int slot = ctx.pmf.slot(kk);
        if (slot < 0) throw InternalError("quantized index outside PMF support");
        enc.encode(t.cum[slot], t.freq[slot], kFreqTotal);
        any_coded = true;
      }
      bits -= std::log2(ctx.pmf.prob_of_kk(kk));
      DequantResult dq = dequantize(kk, ctx.bounds);
      states[i] = dq.child;
      if (trace) symbols.push_back(kk);
    }
    if (any_coded) enc.finish();
    c.segments.push_back(std::move(enc.bytes()));

    if (trace) {
      trace->symbols.push_back(std::move(symbols));
      trace->ideal_bits.push_back(bits);
      trace->adjust_count.push_back(adjusted);
      trace_layer_snapshot(trace, states, coded);
    }
  }
  return c;
}

namespace {

// Full greedy decode of whatever the container holds, recording per-layer
// reconstruction states and per-symbol byte marks. decode/truncate/measure
// all assemble their answers from this expansion.
struct Expansion {
  OrderPlan plan;
  std::vector<std::vector<double>> recon_by_layer;  // [0..L][comp], row 0 zeros
  std::vector<std::vector<std::uint64_t>> marks;    // [layer-1][0..decoded]
  std::vector<std::vector<double>> bits_marks;      // cumulative ideal bits, same indexing
  std::vector<std::size_t> decoded;                 // symbols decoded per layer
  int complete_layers = 0;                          // layers fully decoded
  std::size_t n = 0;
  int layers = 0;
};

Expansion expand(const Container& c, CodecTrace* trace) {
  const ContainerHeader& h = c.header;
  Expansion e;
  e.plan = build_plan(h);
  e.n = h.shape.volume();
  e.layers = h.schedule.layers;
  e.recon_by_layer.push_back(std::vector<double>(e.n, 0.0));
  e.marks.resize(e.layers);
  e.bits_marks.resize(e.layers);
  e.decoded.assign(e.layers, 0);

  if (trace) {
    *trace = CodecTrace{};
    trace->plan = e.plan;
    trace->k_count = h.k_count;
    trace->recon_by_layer.push_back(std::vector<double>(e.n, 0.0));
  }

  std::vector<IntervalState> states(e.n);
  std::vector<std::uint8_t> coded(e.n, 0);

  bool stopped = false;
  for (int l = 1; l <= e.layers && !stopped; ++l) {
    if (std::size_t(l - 1) >= c.segments.size()) break;  // segment absent
    const auto& seg = c.segments[l - 1];
    std::optional<RangeDecoder> dec;  // created at the first coded symbol
    auto& marks = e.marks[l - 1];
    auto& bits_marks = e.bits_marks[l - 1];
    marks.push_back(0);
    bits_marks.push_back(0.0);
    double bits = 0.0;
    std::size_t adjusted = 0;
    std::vector<int> symbols;

    for (std::uint32_t i : e.plan.order[l - 1]) {
      const int ch = int(h.shape.channel_of(i));
      IntervalState entry_state =
          coded[i] ? states[i] : init_interval(h.schedule.step_at(1, ch), h.k_count);
      SymbolContext ctx =
          symbol_context(entry_state, h.schedule.step_at(l, ch), h.adjust_threshold, h.sigma[i]);
      int kk;
      if (ctx.pmf.support_size() > 1) {
        if (!dec) dec.emplace(std::span<const std::uint8_t>(seg.data(), seg.size()));
        if (dec->exhausted()) {
          stopped = true;
          break;
        }
        FreqTable t = quantize_freqs(ctx.pmf);
        int slot = t.find_slot(dec->decode_target(kFreqTotal));
        dec->decode_advance(t.cum[slot], t.freq[slot]);
        if (dec->exhausted()) {
          // The symbol's coder bytes are not fully present: treat it as not
          // transmitted so achieved points depend only on byte counts.
          stopped = true;
          break;
        }
        kk = ctx.pmf.support_kk[slot];
      } else {
        kk = ctx.pmf.support_kk[0];
      }
      if (ctx.bounds.adjusted) ++adjusted;
      bits -= std::log2(ctx.pmf.prob_of_kk(kk));
      DequantResult dq = dequantize(kk, ctx.bounds);
      states[i] = dq.child;
      coded[i] = 1;
      marks.push_back(dec ? dec->bytes_consumed() : 0);
      bits_marks.push_back(bits);
      e.decoded[l - 1] += 1;
      if (trace) symbols.push_back(kk);
    }

    std::vector<double> recon(e.n, 0.0);
    for (std::size_t i = 0; i < e.n; ++i)
      if (coded[i]) recon[i] = states[i].recon;
    e.recon_by_layer.push_back(std::move(recon));

    bool complete = e.decoded[l - 1] == e.plan.order[l - 1].size();
    if (complete) e.complete_layers = l;
    else stopped = true;

    if (trace) {
      trace->symbols.push_back(std::move(symbols));
      trace->ideal_bits.push_back(bits);
      trace->adjust_count.push_back(adjusted);
      trace->byte_marks.push_back(marks);
      trace_layer_snapshot(trace, states, coded);
    }
  }
  return e;
}

// Component-granular position: m complete layers + t symbols of layer m+1,
// kept normalized so t < order size (a full layer folds into m+1).
struct SymbolPoint {
  int m = 0;
  std::size_t t = 0;
};

SymbolPoint point_from_real(const Expansion& e, double point) {
  if (point < 0.0) point = 0.0;
  if (point > e.layers) point = e.layers;
  int m = int(std::floor(point));
  double frac = point - m;
  std::size_t t = 0;
  if (m < e.layers && frac > 0.0) {
    std::size_t layer_n = e.plan.order[m].size();
    t = std::size_t(std::floor(frac * double(layer_n) + 1e-9));
    if (t > layer_n) t = layer_n;
    if (t == layer_n) {
      ++m;
      t = 0;
    }
  }
  return {m, t};
}

SymbolPoint available_point(const Expansion& e) {
  int m = e.complete_layers;
  std::size_t t = m < e.layers ? e.decoded[m] : 0;
  return {m, t};
}

SymbolPoint clamp_point(const SymbolPoint& want, const SymbolPoint& avail) {
  if (want.m < avail.m) return want;
  if (want.m > avail.m) return avail;
  return {want.m, std::min(want.t, avail.t)};
}

double point_to_real(const Expansion& e, const SymbolPoint& p) {
  double frac = 0.0;
  if (p.m < e.layers && !e.plan.order[p.m].empty())
    frac = double(p.t) / double(e.plan.order[p.m].size());
  return double(p.m) + frac;
}

std::uint64_t payload_at(const Container& c, const Expansion& e, const SymbolPoint& p) {
  std::uint64_t bytes = 0;
  for (int l = 0; l < p.m; ++l) bytes += 8 + c.segments[l].size();
  if (p.t > 0) bytes += 8 + e.marks[p.m][p.t];
  return bytes;
}

double ideal_bits_at(const Expansion& e, const SymbolPoint& p) {
  double bits = 0.0;
  for (int l = 0; l < p.m; ++l)
    if (!e.bits_marks[l].empty()) bits += e.bits_marks[l].back();
  if (p.t > 0) bits += e.bits_marks[p.m][p.t];
  return bits;
}

DecodeResult assemble(const Container& c, const Expansion& e, const SymbolPoint& p) {
  const ContainerHeader& h = c.header;
  DecodeResult out;
  out.header_bytes = header_size(h);
  out.payload_bytes = payload_at(c, e, p);
  out.achieved_point = point_to_real(e, p);

  UnbiasedLatent recon;
  recon.shape = h.shape;
  recon.values = e.recon_by_layer[p.m];
  if (p.t > 0) {
    const auto& next = e.recon_by_layer[p.m + 1];
    const auto& ord = e.plan.order[p.m];
    for (std::size_t j = 0; j < p.t; ++j) recon.values[ord[j]] = next[ord[j]];
  }

  GaussianParams params{h.shape, h.mu, h.sigma};
  double interp_at = std::max(out.achieved_point, 1.0);
  InterpolatedSteps steps = interpolate_delta(h.schedule, interp_at);
  out.reconstruction = finalize(recon, params, steps.step, steps.inv_step);
  out.recon_unbiased = std::move(recon);
  return out;
}

}  // namespace

DecodeResult decode(const Container& c, double point, CodecTrace* trace) {
  Expansion e = expand(c, trace);
  SymbolPoint want = point_from_real(e, point);
  SymbolPoint p = clamp_point(want, available_point(e));
  return assemble(c, e, p);
}

namespace {

// Largest container prefix whose serialized payload fits the budget
// (8-byte segment length prefixes included, header excluded).
Container clip_by_budget(const Container& c, std::uint64_t payload_budget) {
  Container out;
  out.header = c.header;
  std::uint64_t used = 0;
  for (const auto& seg : c.segments) {
    if (used + 8 > payload_budget) break;
    std::uint64_t avail = std::min<std::uint64_t>(seg.size(), payload_budget - used - 8);
    out.segments.emplace_back(seg.begin(), seg.begin() + std::size_t(avail));
    used += 8 + avail;
    if (avail < seg.size()) break;
  }
  return out;
}

// Snap a cut forward over symbols that consume no further coder bytes (they
// are already determined by the bytes behind the cut), folding a completed
// layer into the next integer point.
SymbolPoint snap_to_byte_boundary(const Expansion& e, SymbolPoint p) {
  if (p.t == 0) return p;
  const auto& marks = e.marks[p.m];
  while (p.t + 1 < marks.size() && marks[p.t + 1] == marks[p.t]) ++p.t;
  if (p.t == e.plan.order[p.m].size() && p.t == e.decoded[p.m]) p = SymbolPoint{p.m + 1, 0};
  return p;
}

Container build_prefix(const Container& c, const Expansion& e, const SymbolPoint& p) {
  Container out;
  out.header = c.header;
  for (int l = 0; l < p.m; ++l) out.segments.push_back(c.segments[l]);
  if (p.t > 0) {
    std::uint64_t take = e.marks[p.m][p.t];
    const auto& seg = c.segments[p.m];
    out.segments.emplace_back(seg.begin(), seg.begin() + std::size_t(take));
  }
  return out;
}

}  // namespace

DecodeResult decode_bytes(const Container& c, std::uint64_t payload_budget,
                          CodecTrace* trace) {
  Container clipped = clip_by_budget(c, payload_budget);
  Expansion e = expand(clipped, trace);
  return assemble(clipped, e, available_point(e));
}

Container truncate(const Container& c, double point) {
  Expansion e = expand(c, nullptr);
  SymbolPoint p = clamp_point(point_from_real(e, point), available_point(e));
  p = snap_to_byte_boundary(e, p);
  return build_prefix(c, e, p);
}

Container truncate_bytes(const Container& c, std::uint64_t payload_budget) {
  DecodeResult r = decode_bytes(c, payload_budget);
  return truncate(c, r.achieved_point);
}

std::vector<MeasureRow> measure(const Container& c, const LatentTensor& latent,
                                const std::vector<double>& points) {
  if (!(latent.shape == c.header.shape))
    throw StructuralError("measure: latent shape does not match container");
  Expansion e = expand(c, nullptr);
  const std::size_t n = e.n;

  std::vector<MeasureRow> rows;
  rows.reserve(points.size());
  for (double want : points) {
    SymbolPoint p = clamp_point(point_from_real(e, want), available_point(e));
    DecodeResult d = assemble(c, e, p);
    MeasureRow row;
    row.point = d.achieved_point;
    row.header_bytes = d.header_bytes;
    row.payload_bytes = d.payload_bytes;
    row.bpp = double(d.payload_bytes) * 8.0 / double(n);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double diff = latent.values[i] - d.reconstruction.values[i];
      err += diff * diff;
    }
    row.msqe = err / double(n);
    // Components with at least one decoded symbol at this point.
    std::size_t touched = p.m > 0 ? e.plan.masks[p.m - 1].popcount() : 0;
    if (p.t > 0) {
      const auto& ord = e.plan.order[p.m];
      for (std::size_t j = 0; j < p.t; ++j)
        if (e.plan.first_layer[ord[j]] == std::uint32_t(p.m + 1)) ++touched;
    }
    row.selection_ratio = double(touched) / double(n);
    row.ideal_bits_cum = ideal_bits_at(e, p);
    rows.push_back(row);
  }
  return rows;
}

std::string measure_csv(const std::vector<MeasureRow>& rows) {
  std::string out = "point,bpp,msqe,selection_ratio,header_bytes,payload_bytes\n";
  char buf[256];
  for (const MeasureRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%llu,%llu\n", r.point, r.bpp, r.msqe,
                  r.selection_ratio, (unsigned long long)r.header_bytes,
                  (unsigned long long)r.payload_bytes);
    out += buf;
  }
  return out;
}

}  // namespace hqs

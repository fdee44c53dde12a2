// hqstream: progressive latent-domain codec with learned hierarchical
// quantization. Subcommands: encode, decode, truncate, fit, rd-curve,
// inspect.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hqs/codec.hpp"
#include "hqs/latent_io.hpp"
#include "hqs/optimizer.hpp"
#include "hqs/source.hpp"

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw hqs::ParseError("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw hqs::ParseError("cannot open '" + path + "' for writing");
  f << text;
}

std::vector<double> parse_point_list(const std::string& spec) {
  std::vector<double> points;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    points.push_back(std::stod(item));
  }
  if (points.empty()) throw hqs::ParseError("empty point list");
  return points;
}

int cmd_encode(const std::string& in_path, const std::string& out_path,
               const std::string& schedule_path) {
  hqs::LatentFile lf = hqs::read_latent_file(in_path);
  hqs::ParsedSchedule ps = hqs::schedule_from_text(read_text_file(schedule_path));
  if (ps.schedule.channels != int(lf.latent.shape.channels))
    throw hqs::StructuralError("schedule channel count (" +
                               std::to_string(ps.schedule.channels) +
                               ") does not match latent channels (" +
                               std::to_string(lf.latent.shape.channels) + ")");
  hqs::EncodeConfig cfg;
  cfg.adjust_threshold = ps.adjust_threshold;
  cfg.importance = lf.importance;
  hqs::Container c = hqs::encode(lf.latent, lf.params, ps.schedule, cfg);
  hqs::write_container_file(out_path, c);

  std::uint64_t payload = 0;
  std::printf("wrote %s: header %zu bytes, segments", out_path.c_str(),
              hqs::header_size(c.header));
  for (std::size_t l = 0; l < c.segments.size(); ++l) {
    std::printf(" L%zu=%zu", l + 1, c.segments[l].size());
    payload += 8 + c.segments[l].size();
  }
  std::printf(", payload %llu bytes\n", (unsigned long long)payload);
  return 0;
}

int cmd_decode(const std::string& in_path, const std::string& out_path, double point,
               bool have_point, std::uint64_t bytes, bool have_bytes) {
  hqs::Container c = hqs::read_container_file(in_path);
  hqs::DecodeResult r;
  if (have_bytes) {
    r = hqs::decode_bytes(c, bytes);
  } else {
    r = hqs::decode(c, have_point ? point : double(c.header.schedule.layers));
  }
  hqs::LatentFile out;
  out.latent = r.reconstruction;
  out.params.shape = c.header.shape;
  out.params.mu = c.header.mu;
  out.params.sigma = c.header.sigma;
  hqs::write_latent_file(out_path, out);
  std::printf("decoded %s at point %.9g (payload %llu bytes) -> %s\n", in_path.c_str(),
              r.achieved_point, (unsigned long long)r.payload_bytes, out_path.c_str());
  return 0;
}

int cmd_truncate(const std::string& in_path, const std::string& out_path, double point,
                 bool have_point, std::uint64_t bytes, bool have_bytes) {
  hqs::Container c = hqs::read_container_file(in_path);
  hqs::Container prefix =
      have_bytes ? hqs::truncate_bytes(c, bytes)
                 : hqs::truncate(c, have_point ? point : double(c.header.schedule.layers));
  hqs::write_container_file(out_path, prefix);
  hqs::DecodeResult check = hqs::decode(prefix, double(c.header.schedule.layers));
  std::printf("truncated %s -> %s (decodes to point %.9g)\n", in_path.c_str(),
              out_path.c_str(), check.achieved_point);
  return 0;
}

int cmd_fit(const std::string& corpus_path, const std::string& source_spec,
            const std::string& out_path, int layers, double lambda_base,
            std::uint64_t seed, int sweeps, double threshold) {
  hqs::LatentTensor latent;
  hqs::GaussianParams params;
  if (!corpus_path.empty()) {
    hqs::LatentFile lf = hqs::read_latent_file(corpus_path);
    latent = lf.latent;
    params = lf.params;
  } else {
    hqs::SourceConfig sc = hqs::parse_source_spec(source_spec);
    sc.seed = seed;
    hqs::SampledLatent s = hqs::sample_source(sc);
    latent = s.latent;
    params = s.params;
  }
  hqs::OptConfig cfg;
  cfg.loss.lambda_base = lambda_base;
  cfg.sweeps = sweeps;
  hqs::OptResult r = hqs::optimize_schedule(latent, params, layers, cfg);
  std::ostringstream header;
  header << "# fit: lambda-base " << lambda_base << ", sweeps " << sweeps << ", seed " << seed
         << ", source "
         << (corpus_path.empty() ? source_spec : corpus_path) << ", loss " << r.report.total
         << "\n";
  write_text_file(out_path, header.str() + hqs::schedule_to_text(r.schedule, threshold));
  std::printf("fit: %ld evaluations, loss %.9g\n", r.evals, r.report.total);
  for (int l = 1; l <= layers; ++l)
    std::printf("  layer %d: rate %.6g bits/comp, distortion %.6g\n", l,
                r.report.rate[l - 1], r.report.distortion[l - 1]);
  if (r.budget_exhausted) std::printf("note: %s\n", r.diagnostic.c_str());
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_rdcurve(const std::string& in_path, const std::string& schedule_path,
                const std::string& point_spec, const std::string& format) {
  hqs::LatentFile lf = hqs::read_latent_file(in_path);
  hqs::ParsedSchedule ps = hqs::schedule_from_text(read_text_file(schedule_path));
  hqs::EncodeConfig cfg;
  cfg.adjust_threshold = ps.adjust_threshold;
  cfg.importance = lf.importance;
  hqs::Container c = hqs::encode(lf.latent, lf.params, ps.schedule, cfg);

  std::vector<double> points;
  if (!point_spec.empty()) {
    points = parse_point_list(point_spec);
  } else {
    for (int l = 1; l <= ps.schedule.layers; ++l) points.push_back(double(l));
  }
  auto rows = hqs::measure(c, lf.latent, points);
  if (format == "csv") {
    std::fputs(hqs::measure_csv(rows).c_str(), stdout);
  } else {
    std::printf("%10s %14s %14s %10s %12s %14s\n", "point", "bpp", "msqe", "selected",
                "header", "payload");
    for (const auto& r : rows)
      std::printf("%10.4f %14.6g %14.6g %9.2f%% %12llu %14llu\n", r.point, r.bpp, r.msqe,
                  100.0 * r.selection_ratio, (unsigned long long)r.header_bytes,
                  (unsigned long long)r.payload_bytes);
  }
  return 0;
}

int cmd_inspect(const std::string& in_path) {
  hqs::Container c = hqs::read_container_file(in_path);
  const hqs::ContainerHeader& h = c.header;
  std::printf("container: %s\n", in_path.c_str());
  std::printf("  shape: %ux%ux%u (%zu components)\n", h.shape.channels, h.shape.height,
              h.shape.width, h.shape.volume());
  std::printf("  layers: %d, K: %d, T: %.9g\n", h.schedule.layers, h.k_count,
              h.adjust_threshold);
  std::printf("  header: %zu bytes, importance plane: %s\n", hqs::header_size(h),
              h.importance ? "yes" : "no");
  for (int l = 1; l <= h.schedule.layers; ++l) {
    std::printf("  delta[%d]:", l);
    for (int ch = 0; ch < std::min(h.schedule.channels, 8); ++ch)
      std::printf(" %.6g", h.schedule.step_at(l, ch));
    if (h.schedule.channels > 8) std::printf(" ...");
    std::printf("  gamma=%.6g\n", h.schedule.gamma[l - 1]);
  }
  std::printf("  segments present: %zu of %d\n", c.segments.size(), h.schedule.layers);
  for (std::size_t l = 0; l < c.segments.size(); ++l)
    std::printf("    segment %zu: %zu bytes\n", l + 1, c.segments[l].size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hqstream: progressive latent codec with learned hierarchical quantization"};
  app.require_subcommand(1);

  std::string in_path, out_path, schedule_path, source_spec = "4x64x64:0.1..10:channel";
  std::string point_spec, format = "csv", corpus_path;
  double point = 0.0, lambda_base = 0.2, threshold = 0.3;
  std::uint64_t bytes = 0, seed = 1;
  int layers = 8, sweeps = 3;

  auto* enc = app.add_subcommand("encode", "encode a latent file into a container");
  enc->add_option("input", in_path, "input .hql latent")->required();
  enc->add_option("output", out_path, "output .hqs container")->required();
  enc->add_option("--schedule", schedule_path, "schedule file")->required();

  auto* dec = app.add_subcommand("decode", "decode a container (optionally partial)");
  dec->add_option("input", in_path, "input .hqs container")->required();
  dec->add_option("output", out_path, "output .hql latent")->required();
  auto* dec_point = dec->add_option("--point", point, "progressive point to decode to");
  auto* dec_bytes = dec->add_option("--bytes", bytes, "payload byte budget");
  dec_point->excludes(dec_bytes);

  auto* trunc = app.add_subcommand("truncate", "emit a decodable container prefix");
  trunc->add_option("input", in_path, "input .hqs container")->required();
  trunc->add_option("output", out_path, "output .hqs prefix")->required();
  auto* tr_point = trunc->add_option("--point", point, "progressive point to keep");
  auto* tr_bytes = trunc->add_option("--bytes", bytes, "payload byte budget");
  tr_point->excludes(tr_bytes);

  auto* fit = app.add_subcommand("fit", "learn a schedule for a source or corpus");
  fit->add_option("corpus", corpus_path, "input .hql corpus (optional)");
  fit->add_option("--source", source_spec, "synthetic source spec CxHxW[:lo..hi][:channel|iid]");
  fit->add_option("--out", out_path, "output schedule file")->required();
  fit->add_option("--layers", layers, "quantization layer count");
  fit->add_option("--lambda-base", lambda_base, "top-layer lambda");
  fit->add_option("--seed", seed, "source sampling seed");
  fit->add_option("--sweeps", sweeps, "coordinate descent sweeps");
  fit->add_option("--t", threshold, "boundary adjustment threshold to record");

  auto* rd = app.add_subcommand("rd-curve", "encode and report rate/distortion rows");
  rd->add_option("input", in_path, "input .hql latent")->required();
  rd->add_option("--schedule", schedule_path, "schedule file")->required();
  rd->add_option("--point", point_spec, "comma-separated point list (default: integer layers)");
  rd->add_option("--format", format, "csv or human");

  auto* ins = app.add_subcommand("inspect", "dump container header fields");
  ins->add_option("input", in_path, "input .hqs container")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help parses as an "error" with code 0
  }

  try {
    if (enc->parsed()) return cmd_encode(in_path, out_path, schedule_path);
    if (dec->parsed())
      return cmd_decode(in_path, out_path, point, dec_point->count() > 0, bytes,
                        dec_bytes->count() > 0);
    if (trunc->parsed())
      return cmd_truncate(in_path, out_path, point, tr_point->count() > 0, bytes,
                          tr_bytes->count() > 0);
    if (fit->parsed())
      return cmd_fit(corpus_path, source_spec, out_path, layers, lambda_base, seed, sweeps,
                     threshold);
    if (rd->parsed()) return cmd_rdcurve(in_path, schedule_path, point_spec, format);
    if (ins->parsed()) return cmd_inspect(in_path);
  } catch (const hqs::InternalError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  } catch (const hqs::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

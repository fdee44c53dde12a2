#include "hqs/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace hqs {

void validate_schedule(const StepSchedule& s) {
  if (s.layers < 1) throw StructuralError("schedule must have at least one layer");
  if (s.channels < 1) throw StructuralError("schedule must have at least one channel");
  if (s.step.size() != std::size_t(s.layers) * s.channels ||
      s.inv_step.size() != std::size_t(s.layers) * s.channels)
    throw StructuralError("schedule table size does not match layers*channels");
  if (s.gamma.size() != std::size_t(s.layers))
    throw StructuralError("schedule gamma size does not match layer count");

  auto fail = [](const char* what, int l, int c) {
    throw StructuralError(std::string(what) + " at (" + std::to_string(l) + "," +
                          std::to_string(c) + ")");
  };
  for (int l = 1; l <= s.layers; ++l) {
    for (int c = 0; c < s.channels; ++c) {
      double d = s.step_at(l, c);
      double di = s.inv_step_at(l, c);
      if (!(d > 0.0) || !std::isfinite(d)) fail("non-positive step", l, c);
      if (!(di > 0.0) || !std::isfinite(di)) fail("non-positive inverse step", l, c);
      if (l > 1 && d > s.step_at(l - 1, c)) fail("step increases with layer", l, c);
    }
    if (!(s.gamma[l - 1] > 0.0) || !std::isfinite(s.gamma[l - 1]))
      fail("non-positive gamma", l, 0);
  }
}

StepSchedule trit_schedule(int layers, int channels, double finest_step) {
  if (layers < 1 || channels < 1 || !(finest_step > 0.0))
    throw StructuralError("invalid trit schedule request");
  StepSchedule s;
  s.layers = layers;
  s.channels = channels;
  s.step.resize(std::size_t(layers) * channels);
  s.inv_step.resize(s.step.size());
  s.gamma.assign(layers, kAllPassGamma);
  for (int l = 1; l <= layers; ++l) {
    double d = finest_step * std::pow(3.0, double(layers - l));
    for (int c = 0; c < channels; ++c) {
      s.step_at(l, c) = d;
      s.inv_step_at(l, c) = d;
    }
  }
  return s;
}

InterpolatedSteps interpolate_delta(const StepSchedule& s, double point) {
  if (point < 1.0) point = 1.0;
  if (point > s.layers) point = s.layers;
  int lo = int(std::floor(point));
  double frac = point - lo;
  InterpolatedSteps out;
  out.step.resize(s.channels);
  out.inv_step.resize(s.channels);
  if (frac == 0.0) {
    for (int c = 0; c < s.channels; ++c) {
      out.step[c] = s.step_at(lo, c);
      out.inv_step[c] = s.inv_step_at(lo, c);
    }
    return out;
  }
  int hi = lo + 1;
  for (int c = 0; c < s.channels; ++c) {
    out.step[c] = std::pow(s.step_at(lo, c), 1.0 - frac) * std::pow(s.step_at(hi, c), frac);
    out.inv_step[c] =
        std::pow(s.inv_step_at(lo, c), 1.0 - frac) * std::pow(s.inv_step_at(hi, c), frac);
  }
  return out;
}

void canonicalize(StepSchedule& s) {
  canon_f32(s.step);
  canon_f32(s.inv_step);
  canon_f32(s.gamma);
}

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string schedule_to_text(const StepSchedule& s, double adjust_threshold) {
  std::ostringstream os;
  os << "# hqstream schedule\n";
  os << "layers = " << s.layers << "\n";
  os << "channels = " << s.channels << "\n";
  os << "t = " << fmt_g(adjust_threshold) << "\n";
  os << "gamma =";
  for (double g : s.gamma) os << " " << fmt_g(g);
  os << "\n";
  for (int l = 1; l <= s.layers; ++l) {
    os << "delta." << l << " =";
    for (int c = 0; c < s.channels; ++c) os << " " << fmt_g(s.step_at(l, c));
    os << "\n";
  }
  for (int l = 1; l <= s.layers; ++l) {
    os << "delta_inv." << l << " =";
    for (int c = 0; c < s.channels; ++c) os << " " << fmt_g(s.inv_step_at(l, c));
    os << "\n";
  }
  return os.str();
}

namespace {

std::vector<double> parse_numbers(const std::string& tail, int line_no) {
  std::vector<double> out;
  std::istringstream is(tail);
  double v;
  while (is >> v) out.push_back(v);
  if (!is.eof())
    throw ParseError("schedule line " + std::to_string(line_no) + ": expected numbers");
  return out;
}

}  // namespace

ParsedSchedule schedule_from_text(const std::string& text) {
  ParsedSchedule out;
  StepSchedule& s = out.schedule;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  std::vector<std::pair<int, std::vector<double>>> deltas, inv_deltas;
  std::vector<double> gamma;

  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ParseError("schedule line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    // Trim key.
    auto b = key.find_first_not_of(" \t");
    auto e = key.find_last_not_of(" \t\r");
    if (b == std::string::npos)
      throw ParseError("schedule line " + std::to_string(line_no) + ": empty key");
    key = key.substr(b, e - b + 1);

    if (key == "layers") {
      s.layers = int(parse_numbers(val, line_no).at(0));
    } else if (key == "channels") {
      s.channels = int(parse_numbers(val, line_no).at(0));
    } else if (key == "t") {
      out.adjust_threshold = parse_numbers(val, line_no).at(0);
    } else if (key == "gamma") {
      gamma = parse_numbers(val, line_no);
    } else if (key.rfind("delta_inv.", 0) == 0) {
      int l = std::stoi(key.substr(10));
      inv_deltas.emplace_back(l, parse_numbers(val, line_no));
    } else if (key.rfind("delta.", 0) == 0) {
      int l = std::stoi(key.substr(6));
      deltas.emplace_back(l, parse_numbers(val, line_no));
    } else {
      throw ParseError("schedule line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }

  if (s.layers < 1 || s.channels < 1)
    throw ParseError("schedule must declare layers and channels");
  s.step.assign(std::size_t(s.layers) * s.channels, 0.0);
  s.inv_step.assign(s.step.size(), 0.0);
  s.gamma.assign(s.layers, 1.0);
  if (!gamma.empty()) {
    if (gamma.size() != std::size_t(s.layers))
      throw ParseError("gamma must list one value per layer");
    s.gamma = gamma;
  }
  auto fill = [&](const std::vector<std::pair<int, std::vector<double>>>& rows,
                  std::vector<double>& table, const char* what) {
    std::vector<bool> seen(s.layers, false);
    for (const auto& [l, vals] : rows) {
      if (l < 1 || l > s.layers)
        throw ParseError(std::string(what) + " row has layer out of range");
      if (vals.size() != std::size_t(s.channels))
        throw ParseError(std::string(what) + " row " + std::to_string(l) +
                         " must list one value per channel");
      for (int c = 0; c < s.channels; ++c) table[s.idx(l, c)] = vals[c];
      seen[l - 1] = true;
    }
    for (int l = 1; l <= s.layers; ++l)
      if (!seen[l - 1]) throw ParseError(std::string(what) + " row missing for layer " +
                                         std::to_string(l));
  };
  fill(deltas, s.step, "delta");
  if (inv_deltas.empty()) {
    s.inv_step = s.step;
  } else {
    fill(inv_deltas, s.inv_step, "delta_inv");
  }
  validate_schedule(s);
  return out;
}

}  // namespace hqs

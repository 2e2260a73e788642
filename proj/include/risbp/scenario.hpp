// SPDX-License-Identifier: Apache-2.0
//
// risbp: transmit beampattern synthesis for RIS-based architectures
// Copyright (C) 2026 The risbp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "risbp/beampattern.hpp"
#include "risbp/channel.hpp"
#include "risbp/geometry.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace risbp {

/// Parse failure anchored to a line of the scenario text.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& origin, int line, const std::string& what)
      : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct TapEntry {
  Index element = 0;
  Index source = 0;
  Tap tap;
};

struct Scenario {
  // geometry
  int ris_rows = 10;
  int ris_cols = 10;
  std::optional<double> ris_spacing_m;  // unset means half wavelength at fc + W/2
  std::vector<Vec3> ris_positions_m;    // explicit layout; overrides rows/cols when non-empty
  Vec3 ris_feed_boresight{-1.0, 0.0, 0.0};
  SourceGeometry sources;

  // signal
  double W_hz = 100e6;
  double T_s = 0.64e-6;
  double fc_hz = 3e9;
  double P_w = 10.0;

  // channel
  std::string channel_model = "los";
  std::vector<TapEntry> taps;

  // grid
  Index K = 128;
  Index L_side = 36;

  // desired pattern
  DesiredPattern desired;
  WeightFunction weight;
  DesiredSampling sampling = DesiredSampling::cell_average;

  // options
  std::string architecture = "ris";
  bool constant_modulus = false;
  double tol = 1e-6;
  int max_iters = 1000;
  std::uint64_t seed = 1;

  // narrowband check
  double half_fov_rad = kPi / 2;
  int fov_points = 91;
  double narrowband_threshold = 0.1;

  bool operator==(const Scenario&) const;
};

namespace detail {

inline bool same_boxes(const std::vector<Box>& a, const std::vector<Box>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Box& p = a[i];
    const Box& q = b[i];
    if (p.f_lo != q.f_lo || p.f_hi != q.f_hi || p.theta_lo != q.theta_lo || p.theta_hi != q.theta_hi ||
        p.phi_lo != q.phi_lo || p.phi_hi != q.phi_hi || p.value != q.value)
      return false;
  }
  return true;
}

}  // namespace detail

inline bool Scenario::operator==(const Scenario& o) const {
  if (taps.size() != o.taps.size()) return false;
  for (std::size_t i = 0; i < taps.size(); ++i)
    if (taps[i].element != o.taps[i].element || taps[i].source != o.taps[i].source ||
        taps[i].tap.gain != o.taps[i].tap.gain || taps[i].tap.delay != o.taps[i].tap.delay)
      return false;
  return ris_rows == o.ris_rows && ris_cols == o.ris_cols && ris_spacing_m == o.ris_spacing_m &&
         ris_positions_m == o.ris_positions_m && ris_feed_boresight == o.ris_feed_boresight &&
         sources.positions == o.sources.positions && sources.boresights == o.sources.boresights &&
         sources.pattern.exponent == o.sources.pattern.exponent && sources.offsets == o.sources.offsets &&
         W_hz == o.W_hz && T_s == o.T_s && fc_hz == o.fc_hz && P_w == o.P_w && channel_model == o.channel_model &&
         K == o.K && L_side == o.L_side && detail::same_boxes(desired.boxes, o.desired.boxes) &&
         weight.base == o.weight.base && detail::same_boxes(weight.emphasis, o.weight.emphasis) &&
         sampling == o.sampling && architecture == o.architecture && constant_modulus == o.constant_modulus &&
         tol == o.tol && max_iters == o.max_iters && seed == o.seed && half_fov_rad == o.half_fov_rad &&
         fov_points == o.fov_points && narrowband_threshold == o.narrowband_threshold;
}

/// Amplitude of the default desired beampattern, 16 / √(W (√2 - sin π/8)).
inline double default_desired_amplitude(double W) { return 16.0 / std::sqrt(W * (std::sqrt(2.0) - std::sin(kPi / 8))); }

enum class NarrowBeamReading {
  printed,           // θ ∈ [-π/4, π/8], φ ∈ [π/8, π/4]; radiates ≈ 13.9 W
  power_consistent,  // θ ∈ [π/8, π/4], φ ∈ [π/8, π/4]; radiates 8 W
};

/// Broad beam over [-W/2, 0] x [0, π/4] x [-π/4, 0] plus a narrow beam over
/// the whole band, both with amplitude 16 / √(W (√2 - sin π/8)).
inline DesiredPattern default_desired_pattern(double W, NarrowBeamReading reading = NarrowBeamReading::printed) {
  const double a = default_desired_amplitude(W);
  DesiredPattern d;
  d.boxes.push_back({-W / 2, 0.0, 0.0, kPi / 4, -kPi / 4, 0.0, a});
  if (reading == NarrowBeamReading::printed)
    d.boxes.push_back({-W / 2, W / 2, -kPi / 4, kPi / 8, kPi / 8, kPi / 4, a});
  else
    d.boxes.push_back({-W / 2, W / 2, kPi / 8, kPi / 4, kPi / 8, kPi / 4, a});
  return d;
}

/// 10 x 10 half-wavelength RIS fed by four sources 0.6 m behind the surface,
/// one above the centroid of each quadrant.
inline Scenario default_scenario(NarrowBeamReading reading = NarrowBeamReading::printed) {
  Scenario s;
  const double d = half_wavelength_spacing(s.fc_hz, s.W_hz);
  const double q = 0.25 * s.ris_rows * d;  // quadrant centroid offset, 2.5 d
  for (double z : {-q, q})
    for (double y : {-q, q}) {
      s.sources.positions.emplace_back(-0.6, y, z);
      s.sources.boresights.emplace_back(1.0, 0.0, 0.0);
      s.sources.offsets.push_back(0.0);
    }
  s.desired = default_desired_pattern(s.W_hz, reading);
  return s;
}

// ---------------------------------------------------------------------------
// derived objects

inline RisGeometry scenario_ris(const Scenario& sc) {
  RisGeometry g;
  if (!sc.ris_positions_m.empty()) {
    g.positions = sc.ris_positions_m;
  } else {
    g = build_planar_ris(sc.ris_rows, sc.ris_cols, sc.ris_spacing_m.value_or(half_wavelength_spacing(sc.fc_hz, sc.W_hz)));
  }
  g.feed_boresight = sc.ris_feed_boresight;
  g.validate();
  return g;
}

inline SignalSpec scenario_signal(const Scenario& sc, Index sources) {
  return SignalSpec::make(sources, sc.W_hz, sc.T_s, sc.fc_hz, sc.P_w);
}

inline ChannelModel scenario_channel(const Scenario& sc, const RisGeometry& ris) {
  ChannelModel ch;
  ch.offsets = sc.sources.offsets;
  if (sc.channel_model == "los") {
    ch.kind = LosChannelModel(ris, sc.sources);
  } else if (sc.channel_model == "taps") {
    TapChannel t(ris.size(), sc.sources.size());
    for (const auto& e : sc.taps) t.at(e.element, e.source).push_back(e.tap);
    t.validate();
    ch.kind = std::move(t);
  } else {
    throw std::invalid_argument("scenario: unknown channel model '" + sc.channel_model + "'");
  }
  return ch;
}

inline RisSystem scenario_system(const Scenario& sc) {
  sc.sources.validate();
  RisSystem sys;
  sys.ris = scenario_ris(sc);
  sys.channel = scenario_channel(sc, sys.ris);
  sys.signal = scenario_signal(sc, sc.sources.size());
  return sys;
}

inline Grids scenario_grids(const Scenario& sc) { return build_grids(sc.K, sc.L_side, sc.W_hz); }

/// Desired samples and normalized weights on the scenario grid.
inline std::pair<RMat, RMat> scenario_tables(const Scenario& sc, const Grids& g) {
  RMat D = sample_desired(sc.desired, g, sc.sampling);
  RMat w = build_weights(D, g, sc.weight);
  return {std::move(D), std::move(w)};
}

// ---------------------------------------------------------------------------
// text format

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct LineReader {
  std::string origin;
  int line;

  [[noreturn]] void fail(const std::string& what) const { throw ScenarioError(origin, line, what); }

  std::vector<double> numbers(const std::string& value, std::size_t expected) const {
    std::istringstream in(value);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        fail("expected a number, got '" + tok + "'");
      }
      if (used != tok.size()) fail("expected a number, got '" + tok + "'");
      out.push_back(v);
    }
    if (expected && out.size() != expected)
      fail("expected " + std::to_string(expected) + " numbers, got " + std::to_string(out.size()));
    return out;
  }
  double number(const std::string& value) const { return numbers(value, 1)[0]; }
  long long integer(const std::string& value) const {
    const double v = number(value);
    if (v != std::floor(v) || std::abs(v) > 9e15) fail("expected an integer, got '" + value + "'");
    return static_cast<long long>(v);
  }
  bool boolean(const std::string& value) const {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail("expected true or false, got '" + value + "'");
  }
  Box box(const std::string& value) const {
    const auto v = numbers(value, 7);
    Box b{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
    if (!(b.f_lo < b.f_hi && b.theta_lo < b.theta_hi && b.phi_lo < b.phi_hi)) fail("box intervals must be increasing");
    if (b.value < 0.0) fail("box value must be nonnegative");
    return b;
  }
};

}  // namespace detail

/// Parses the sectioned `key = value` scenario format. Keys carry their unit
/// as a suffix; `#` starts a comment. Missing keys keep the defaults of
/// `Scenario{}` except for lists (sources, taps, boxes), which start empty.
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>") {
  Scenario sc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const detail::LineReader r{origin, line};
    std::string s = raw.substr(0, raw.find('#'));
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') r.fail("malformed section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      static const std::set<std::string> known{"geometry", "signal", "channel", "grid", "desired", "options", "narrowband"};
      if (!known.count(section)) r.fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) r.fail("expected key = value");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (section.empty()) r.fail("key '" + key + "' outside of a section");
    if (value.empty()) r.fail("empty value for '" + key + "'");

    auto unknown = [&] { r.fail("unknown key '" + key + "' in [" + section + "]"); };
    if (section == "geometry") {
      if (key == "ris_rows") sc.ris_rows = static_cast<int>(r.integer(value));
      else if (key == "ris_cols") sc.ris_cols = static_cast<int>(r.integer(value));
      else if (key == "ris_spacing_m") sc.ris_spacing_m = value == "auto" ? std::nullopt : std::optional(r.number(value));
      else if (key == "ris_element_m") {
        const auto v = r.numbers(value, 3);
        sc.ris_positions_m.emplace_back(v[0], v[1], v[2]);
      } else if (key == "ris_feed_boresight") {
        const auto v = r.numbers(value, 3);
        sc.ris_feed_boresight = Vec3(v[0], v[1], v[2]);
      } else if (key == "source_beta") sc.sources.pattern.exponent = r.number(value);
      else if (key == "source") {
        // x y z [m], boresight bx by bz, offset [s]
        const auto v = r.numbers(value, 7);
        sc.sources.positions.emplace_back(v[0], v[1], v[2]);
        sc.sources.boresights.emplace_back(v[3], v[4], v[5]);
        sc.sources.offsets.push_back(v[6]);
      } else unknown();
    } else if (section == "signal") {
      if (key == "W_hz") sc.W_hz = r.number(value);
      else if (key == "T_s") sc.T_s = r.number(value);
      else if (key == "fc_hz") sc.fc_hz = r.number(value);
      else if (key == "P_w") sc.P_w = r.number(value);
      else unknown();
    } else if (section == "channel") {
      if (key == "model") {
        if (value != "los" && value != "taps") r.fail("channel model must be los or taps");
        sc.channel_model = value;
      } else if (key == "tap") {
        // element source gain_re gain_im delay_s
        const auto v = r.numbers(value, 5);
        if (v[0] < 0 || v[1] < 0 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
          r.fail("tap indices must be nonnegative integers");
        if (v[4] < 0.0) r.fail("tap delay must be nonnegative");
        sc.taps.push_back({static_cast<Index>(v[0]), static_cast<Index>(v[1]), {cplx{v[2], v[3]}, v[4]}});
      } else unknown();
    } else if (section == "grid") {
      if (key == "K") sc.K = r.integer(value);
      else if (key == "L_side") sc.L_side = r.integer(value);
      else unknown();
    } else if (section == "desired") {
      // f_lo f_hi [Hz] theta_lo theta_hi phi_lo phi_hi [rad] value
      if (key == "box") sc.desired.boxes.push_back(r.box(value));
      else if (key == "weight_base") sc.weight.base = r.number(value);
      else if (key == "weight_box") sc.weight.emphasis.push_back(r.box(value));
      else if (key == "sampling") {
        if (value == "cell_average") sc.sampling = DesiredSampling::cell_average;
        else if (value == "point") sc.sampling = DesiredSampling::point;
        else r.fail("sampling must be cell_average or point");
      } else unknown();
    } else if (section == "options") {
      if (key == "architecture") {
        if (value != "ris" && value != "mimo" && value != "pa") r.fail("architecture must be ris, mimo or pa");
        sc.architecture = value;
      } else if (key == "constant_modulus") sc.constant_modulus = r.boolean(value);
      else if (key == "tol") sc.tol = r.number(value);
      else if (key == "max_iters") sc.max_iters = static_cast<int>(r.integer(value));
      else if (key == "seed") {
        const long long v = r.integer(value);
        if (v < 0) r.fail("seed must be nonnegative");
        sc.seed = static_cast<std::uint64_t>(v);
      } else unknown();
    } else if (section == "narrowband") {
      if (key == "half_fov_rad") sc.half_fov_rad = r.number(value);
      else if (key == "points_per_axis") sc.fov_points = static_cast<int>(r.integer(value));
      else if (key == "threshold") sc.narrowband_threshold = r.number(value);
      else unknown();
    }
  }
  const detail::LineReader end{origin, line};
  if (sc.sources.positions.empty()) end.fail("scenario defines no sources");
  if (sc.ris_rows < 1 || sc.ris_cols < 1) end.fail("ris_rows and ris_cols must be >= 1");
  if (sc.ris_spacing_m && !(*sc.ris_spacing_m > 0.0)) end.fail("ris_spacing_m must be positive");
  if (sc.K < 1 || sc.L_side < 1) end.fail("K and L_side must be >= 1");
  if (!(sc.tol > 0.0) || sc.max_iters < 1) end.fail("tol must be positive and max_iters >= 1");
  if (sc.channel_model == "taps" && sc.taps.empty()) end.fail("tap channel without taps");
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str(), path);
}

inline std::string serialize_scenario(const Scenario& sc) {
  using detail::fmt;
  std::ostringstream o;
  auto vec = [](const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); };
  auto box = [](const Box& b) {
    return fmt(b.f_lo) + " " + fmt(b.f_hi) + " " + fmt(b.theta_lo) + " " + fmt(b.theta_hi) + " " + fmt(b.phi_lo) + " " +
           fmt(b.phi_hi) + " " + fmt(b.value);
  };
  o << "[geometry]\n";
  o << "ris_rows = " << sc.ris_rows << "\n";
  o << "ris_cols = " << sc.ris_cols << "\n";
  o << "ris_spacing_m = " << (sc.ris_spacing_m ? fmt(*sc.ris_spacing_m) : "auto") << "\n";
  for (const auto& p : sc.ris_positions_m) o << "ris_element_m = " << vec(p) << "\n";
  o << "ris_feed_boresight = " << vec(sc.ris_feed_boresight) << "\n";
  o << "source_beta = " << fmt(sc.sources.pattern.exponent) << "\n";
  o << "# x y z [m]  boresight  offset [s]\n";
  for (std::size_t j = 0; j < sc.sources.positions.size(); ++j)
    o << "source = " << vec(sc.sources.positions[j]) << "  " << vec(sc.sources.boresights[j]) << "  "
      << fmt(sc.sources.offsets[j]) << "\n";
  o << "\n[signal]\n";
  o << "W_hz = " << fmt(sc.W_hz) << "\nT_s = " << fmt(sc.T_s) << "\nfc_hz = " << fmt(sc.fc_hz)
    << "\nP_w = " << fmt(sc.P_w) << "\n";
  o << "\n[channel]\nmodel = " << sc.channel_model << "\n";
  for (const auto& t : sc.taps)
    o << "tap = " << t.element << " " << t.source << " " << fmt(t.tap.gain.real()) << " " << fmt(t.tap.gain.imag())
      << " " << fmt(t.tap.delay) << "\n";
  o << "\n[grid]\nK = " << sc.K << "\nL_side = " << sc.L_side << "\n";
  o << "\n[desired]\n";
  o << "sampling = " << (sc.sampling == DesiredSampling::point ? "point" : "cell_average") << "\n";
  o << "# f_lo f_hi [Hz]  theta_lo theta_hi  phi_lo phi_hi [rad]  amplitude\n";
  for (const auto& b : sc.desired.boxes) o << "box = " << box(b) << "\n";
  o << "weight_base = " << fmt(sc.weight.base) << "\n";
  for (const auto& b : sc.weight.emphasis) o << "weight_box = " << box(b) << "\n";
  o << "\n[options]\n";
  o << "architecture = " << sc.architecture << "\nconstant_modulus = " << (sc.constant_modulus ? "true" : "false")
    << "\ntol = " << fmt(sc.tol) << "\nmax_iters = " << sc.max_iters << "\nseed = " << sc.seed << "\n";
  o << "\n[narrowband]\n";
  o << "half_fov_rad = " << fmt(sc.half_fov_rad) << "\npoints_per_axis = " << sc.fov_points
    << "\nthreshold = " << fmt(sc.narrowband_threshold) << "\n";
  return o.str();
}

}  // namespace risbp

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

#include "risbp/scenario.hpp"
#include "risbp/synth.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace risbp {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// binary complex vectors: "BFRG0001", uint64 length, then re/im float64 pairs,
// all little endian

inline constexpr char kVectorMagic[8] = {'B', 'F', 'R', 'G', '0', '0', '0', '1'};

namespace detail {

inline void put_u64(std::ostream& o, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  o.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& o, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(o, bits);
}

inline std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(path + ": truncated vector file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double get_f64(std::istream& in, const std::string& path) {
  const std::uint64_t bits = get_u64(in, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline void write_vector(const std::string& path, const CVec& v) {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw std::runtime_error("cannot write '" + path + "'");
  o.write(kVectorMagic, 8);
  detail::put_u64(o, static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) {
    detail::put_f64(o, v(i).real());
    detail::put_f64(o, v(i).imag());
  }
  if (!o) throw std::runtime_error("write failed for '" + path + "'");
}

inline CVec read_vector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kVectorMagic, 8) != 0) throw FormatError(path + ": bad vector header");
  const std::uint64_t n = detail::get_u64(in, path);
  if (n > (1ull << 32)) throw FormatError(path + ": implausible vector length");
  CVec v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) {
    const double re = detail::get_f64(in, path);
    v(i) = cplx{re, detail::get_f64(in, path)};
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path + ": trailing bytes after vector data");
  return v;
}

// ---------------------------------------------------------------------------
// design directories

/// Architecture label plus the canonical vectors of a design. RIS designs carry
/// s and x; fully digital ones carry ζ; phased arrays carry ϱ, χ and α.
struct StoredDesign {
  std::string architecture;  // ris, ris-cm, mimo, mimo-cm, pa, pa-cm
  std::map<std::string, CVec> vectors;

  const CVec& at(const std::string& name) const {
    const auto it = vectors.find(name);
    if (it == vectors.end()) throw FormatError("design is missing vector '" + name + "'");
    return it->second;
  }
};

inline StoredDesign store(const RisDesign& d) { return {"ris", {{"s", d.s}, {"x", d.x}}}; }
inline StoredDesign store(const CmRisDesign& d) {
  return {"ris-cm", {{"s", d.s()}, {"x", d.x}, {"u", d.u.cast<cplx>()}, {"omega", d.omega}}};
}
inline StoredDesign store(const MimoDesign& d) { return {"mimo", {{"zeta", d.zeta}}}; }
inline StoredDesign store(const CmMimoDesign& d) {
  return {"mimo-cm", {{"zeta", d.zeta()}, {"gamma", d.gamma.cast<cplx>()}, {"xi", d.xi}}};
}
inline StoredDesign store(const PaDesign& d) {
  return {"pa", {{"rho", d.rho}, {"chi", d.chi}, {"alpha", CVec::Ones(1)}}};
}
inline StoredDesign store(const CmPaDesign& d) {
  return {"pa-cm", {{"rho", d.rho}, {"chi", d.chi}, {"alpha", CVec::Constant(1, d.alpha)}}};
}

inline void write_design(const std::filesystem::path& dir, const StoredDesign& d) {
  std::ofstream m(dir / "design.txt", std::ios::trunc);
  if (!m) throw std::runtime_error("cannot write '" + (dir / "design.txt").string() + "'");
  m << "architecture = " << d.architecture << "\n";
  for (const auto& [name, v] : d.vectors) {
    m << "vector = " << name << ".bin\n";
    write_vector((dir / (name + ".bin")).string(), v);
  }
}

inline StoredDesign read_design(const std::filesystem::path& dir) {
  std::ifstream m(dir / "design.txt");
  if (!m) throw std::runtime_error("cannot open '" + (dir / "design.txt").string() + "'");
  StoredDesign d;
  std::string line;
  while (std::getline(m, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "architecture") {
      d.architecture = value;
    } else if (key == "vector") {
      if (value.size() < 5 || value.substr(value.size() - 4) != ".bin") throw FormatError("bad vector entry " + value);
      d.vectors[value.substr(0, value.size() - 4)] = read_vector((dir / value).string());
    }
  }
  static const std::set<std::string> known{"ris", "ris-cm", "mimo", "mimo-cm", "pa", "pa-cm"};
  if (!known.count(d.architecture)) throw FormatError("design.txt: unknown architecture '" + d.architecture + "'");
  return d;
}

// ---------------------------------------------------------------------------
// evaluation of stored designs

/// Scenario objects needed to evaluate any architecture on the grid.
struct Workbench {
  Scenario scenario;
  RisSystem system;
  Grids grids;
  RMat desired;
  RMat weights;

  explicit Workbench(Scenario sc) : scenario(std::move(sc)) {
    system = scenario_system(scenario);
    grids = scenario_grids(scenario);
    std::tie(desired, weights) = scenario_tables(scenario, grids);
  }

  bool digital(const std::string& arch) const { return arch.rfind("ris", 0) != 0; }

  SpectrumCache cache(const std::string& arch) const {
    return digital(arch) ? build_array_cache(system.ris, system.signal, grids, desired, weights)
                         : build_ris_cache(system, grids, desired, weights);
  }
};

/// Throws std::domain_error when the design violates its constraints.
inline void check_feasible(const StoredDesign& d, const Workbench& wb) {
  const Index M = wb.system.ris.size();
  const Index J = wb.system.signal.J;
  const Index N = wb.system.signal.N;
  const double P = wb.system.signal.P;
  auto size = [](const CVec& v, Index n, const char* what) {
    if (v.size() != n)
      throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                                  std::to_string(v.size()));
  };
  auto unit = [](const CVec& v, const char* what) {
    for (Index i = 0; i < v.size(); ++i)
      if (std::abs(std::abs(v(i)) - 1.0) > 1e-9) throw std::domain_error(std::string(what) + " is not unit modulus");
  };
  auto power = [](double e, double budget, const char* what) {
    if (e > budget * (1.0 + 1e-9)) throw std::domain_error(std::string(what) + " exceeds the power budget");
  };
  if (d.architecture == "ris" || d.architecture == "ris-cm") {
    size(d.at("s"), J * N, "s");
    size(d.at("x"), M, "x");
    unit(d.at("x"), "x");
    power(d.at("s").squaredNorm(), static_cast<double>(N) * P, "s");
  } else if (d.architecture == "mimo" || d.architecture == "mimo-cm") {
    size(d.at("zeta"), M * N, "zeta");
    power(d.at("zeta").squaredNorm(), static_cast<double>(N) * P, "zeta");
  } else {
    size(d.at("rho"), N, "rho");
    size(d.at("chi"), M, "chi");
    size(d.at("alpha"), 1, "alpha");
    unit(d.at("chi"), "chi");
    const double a = d.at("alpha")(0).real();
    if (a < 0.0 || d.at("alpha")(0).imag() != 0.0) throw std::domain_error("alpha must be real and nonnegative");
    power(a * a * d.at("rho").squaredNorm(), static_cast<double>(N) * P / static_cast<double>(M), "rho");
    if (d.architecture == "pa-cm") {
      unit(d.at("rho"), "rho");
      power(a * a, P / static_cast<double>(M), "alpha");
    }
  }
}

/// Complex response v^H (...) on every grid node of the workbench.
inline CMat design_inner(const StoredDesign& d, const SpectrumCache& c) {
  if (d.architecture == "ris" || d.architecture == "ris-cm") return ris_inner(c, d.at("s"), d.at("x"));
  if (d.architecture == "mimo" || d.architecture == "mimo-cm") return mimo_inner(c, d.at("zeta"));
  return pa_inner(c, d.at("rho"), d.at("chi"), d.at("alpha")(0).real());
}

/// Amplitude beampattern at an arbitrary (f, direction).
inline std::function<double(double, Direction)> design_evaluator(const StoredDesign& d, const Workbench& wb) {
  if (d.architecture == "ris" || d.architecture == "ris-cm") {
    const CVec s = d.at("s"), x = d.at("x");
    return [&wb, s, x](double f, Direction dir) { return amplitude_beampattern_ris(wb.system, s, x, f, dir); };
  }
  const CVec zeta = (d.architecture == "mimo" || d.architecture == "mimo-cm")
                        ? d.at("zeta")
                        : phased_array_signal(d.at("rho"), d.at("chi"), d.at("alpha")(0).real());
  return [&wb, zeta](double f, Direction dir) {
    return amplitude_beampattern_mimo(wb.system.ris, wb.system.signal, zeta, f, dir);
  };
}

// ---------------------------------------------------------------------------
// text outputs

inline void write_report(const std::filesystem::path& path, const SynthesisReport& r) {
  std::ofstream o(path, std::ios::trunc);
  if (!o) throw std::runtime_error("cannot write '" + path.string() + "'");
  o << "architecture = " << r.architecture << "\n";
  o << "final_rse = " << detail::fmt(r.final_rse) << "\n";
  o << "iterations = " << r.iterations << "\n";
  o << "termination = " << to_string(r.termination) << "\n";
  o << "seed = " << r.seed << "\n";
  o << "wall_time_s = " << detail::fmt(r.wall_time_s) << "\n";
  o << "\n# iteration objective\n";
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) o << i << " " << detail::fmt(r.trajectory[i]) << "\n";
  o << "\n# block objective\n";
  for (const auto& b : r.block_trace) o << b.block << " " << detail::fmt(b.objective) << "\n";
}

/// Reads `key = value` lines of a report (the tables are skipped).
inline std::map<std::string, std::string> read_report_fields(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.rfind("#", 0) == 0) continue;
    out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

inline std::vector<double> read_report_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  bool table = false;
  while (std::getline(in, line)) {
    if (line.rfind("# iteration objective", 0) == 0) {
      table = true;
      continue;
    }
    if (!table) continue;
    if (detail::trim(line).empty() || line[0] == '#') break;
    std::istringstream ss(line);
    std::size_t it;
    double v;
    if (!(ss >> it >> v)) throw FormatError(path.string() + ": malformed trajectory line");
    out.push_back(v);
  }
  return out;
}

inline constexpr double kNpbFloorDb = -300.0;

inline double npb_db(double npb) { return npb > 0.0 ? std::max(kNpbFloorDb, 10.0 * std::log10(npb)) : kNpbFloorDb; }

struct GridRow {
  double f = 0, theta = 0, phi = 0, amplitude = 0, npb_db = 0;
};

inline constexpr const char* kGridHeader = "f_hz,theta_rad,phi_rad,amplitude,npb_db";

inline void write_grid_rows(const std::filesystem::path& path, const std::vector<GridRow>& rows) {
  std::ofstream o(path, std::ios::trunc);
  if (!o) throw std::runtime_error("cannot write '" + path.string() + "'");
  o << kGridHeader << "\n";
  for (const auto& r : rows)
    o << detail::fmt(r.f) << "," << detail::fmt(r.theta) << "," << detail::fmt(r.phi) << "," << detail::fmt(r.amplitude)
      << "," << detail::fmt(r.npb_db) << "\n";
}

/// Full grid in k-major, then ℓ order.
inline std::vector<GridRow> grid_rows(const Grids& g, const RMat& amplitude) {
  const RMat npb = npb_grid(amplitude);
  std::vector<GridRow> rows;
  rows.reserve(static_cast<std::size_t>(g.K() * g.L()));
  for (Index k = 0; k < g.K(); ++k)
    for (Index l = 0; l < g.L(); ++l) {
      const Direction d = g.angle(l);
      rows.push_back({g.freqs(k), d.theta, d.phi, amplitude(k, l), npb_db(npb(k, l))});
    }
  return rows;
}

inline std::vector<GridRow> read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kGridHeader)
    throw FormatError(path.string() + ":1: expected header " + kGridHeader);
  std::vector<GridRow> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    std::array<double, 5> v{};
    std::istringstream ss(line);
    std::string tok;
    std::size_t c = 0;
    while (std::getline(ss, tok, ',')) {
      if (c >= 5) throw FormatError(path.string() + ":" + std::to_string(n) + ": too many fields");
      try {
        std::size_t used = 0;
        v[c] = std::stod(tok, &used);
        if (detail::trim(tok.substr(used)) != "") throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(n) + ": bad number '" + tok + "'");
      }
      ++c;
    }
    if (c != 5) throw FormatError(path.string() + ":" + std::to_string(n) + ": expected 5 fields");
    rows.push_back({v[0], v[1], v[2], v[3], v[4]});
  }
  if (rows.empty()) throw FormatError(path.string() + ": no data rows");
  return rows;
}

// ---------------------------------------------------------------------------
// plot scripts

struct PlotCut {
  enum Axis { frequency, elevation, azimuth } axis;
  double value;  // Hz or rad
};

namespace detail {

inline double nearest(const std::set<double>& values, double target) {
  double best = *values.begin();
  for (double v : values)
    if (std::abs(v - target) < std::abs(best - target)) best = v;
  return best;
}

inline std::string cut_label(const PlotCut& c) {
  char buf[64];
  if (c.axis == PlotCut::frequency)
    std::snprintf(buf, sizeof buf, "frequency_%gMHz", c.value / 1e6);
  else
    std::snprintf(buf, sizeof buf, "%s_%gdeg", c.axis == PlotCut::elevation ? "elevation" : "azimuth",
                  c.value * 180.0 / kPi);
  return buf;
}

}  // namespace detail

/// gnuplot heatmap of 10 log10(NPB) with the data inlined; the cut value is
/// snapped to the nearest value present in the rows.
inline std::string plot_script(const std::vector<GridRow>& rows, const PlotCut& cut, double floor_db = -40.0) {
  std::set<double> fs, ths, phs;
  for (const auto& r : rows) {
    fs.insert(r.f);
    ths.insert(r.theta);
    phs.insert(r.phi);
  }
  const auto& pool = cut.axis == PlotCut::frequency ? fs : (cut.axis == PlotCut::elevation ? ths : phs);
  const double at = detail::nearest(pool, cut.value);
  const double deg = 180.0 / kPi;
  std::ostringstream o;
  const char* xl = cut.axis == PlotCut::frequency ? "azimuth [deg]" : "frequency [MHz]";
  const char* yl = cut.axis == PlotCut::azimuth ? "elevation [deg]" : (cut.axis == PlotCut::frequency ? "elevation [deg]" : "azimuth [deg]");
  char title[128];
  if (cut.axis == PlotCut::frequency)
    std::snprintf(title, sizeof title, "NPB at f = %g MHz", at / 1e6);
  else
    std::snprintf(title, sizeof title, "NPB at %s = %g deg", cut.axis == PlotCut::elevation ? "elevation" : "azimuth",
                  at * deg);
  o << "# columns: x y npb_db\n";
  o << "$data << EOD\n";
  std::vector<std::array<double, 3>> pts;
  for (const auto& r : rows) {
    double x, y;
    if (cut.axis == PlotCut::frequency) {
      if (r.f != at) continue;
      x = r.phi * deg;
      y = r.theta * deg;
    } else if (cut.axis == PlotCut::elevation) {
      if (r.theta != at) continue;
      x = r.f / 1e6;
      y = r.phi * deg;
    } else {
      if (r.phi != at) continue;
      x = r.f / 1e6;
      y = r.theta * deg;
    }
    pts.push_back({x, y, std::max(floor_db, std::min(0.0, r.npb_db))});
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[1] != b[1] ? a[1] < b[1] : a[0] < b[0]; });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && pts[i][1] != pts[i - 1][1]) o << "\n";
    o << detail::fmt(pts[i][0]) << " " << detail::fmt(pts[i][1]) << " " << detail::fmt(pts[i][2]) << "\n";
  }
  o << "EOD\n";
  o << "set title '" << title << "'\n";
  o << "set xlabel '" << xl << "'\nset ylabel '" << yl << "'\n";
  o << "set cblabel 'NPB [dB]'\nset cbrange [" << floor_db << ":0]\n";
  o << "set palette rgbformulae 33,13,10\nset view map\nunset key\n";
  o << "set terminal pngcairo size 800,600\nset output '" << detail::cut_label(cut) << ".png'\n";
  o << "splot $data using 1:2:3 with pm3d\n";
  return o.str();
}

}  // namespace risbp

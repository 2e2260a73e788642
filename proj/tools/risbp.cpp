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

#include "risbp/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace risbp;

namespace {

struct CutOptions {
  std::vector<double> freqs_mhz{-25.0, 25.0};
  std::vector<double> elevations_deg{-33.75, 22.5};
  std::vector<double> azimuths_deg{-22.5, 33.75};

  void add_to(CLI::App* app) {
    app->add_option("--cut-freq-mhz", freqs_mhz, "frequency cuts")->delimiter(',');
    app->add_option("--cut-elevation-deg", elevations_deg, "elevation cuts")->delimiter(',');
    app->add_option("--cut-azimuth-deg", azimuths_deg, "azimuth cuts")->delimiter(',');
  }

  std::vector<PlotCut> cuts() const {
    std::vector<PlotCut> out;
    for (double f : freqs_mhz) out.push_back({PlotCut::frequency, f * 1e6});
    for (double e : elevations_deg) out.push_back({PlotCut::elevation, e * kPi / 180.0});
    for (double a : azimuths_deg) out.push_back({PlotCut::azimuth, a * kPi / 180.0});
    return out;
  }
};

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".write_probe";
  std::ofstream p(probe);
  if (!p) throw std::runtime_error("output directory '" + dir.string() + "' is not writable");
  p.close();
  fs::remove(probe, ec);
}

// Full grid CSV plus one CSV per cut, evaluated exactly at the cut value over
// the grid's remaining axes and normalized by the grid maximum.
void export_grids(const fs::path& dir, const Workbench& wb, const StoredDesign& d, const CMat& inner,
                  const CutOptions& co) {
  const RMat amp = inner.cwiseAbs();
  write_grid_rows(dir / "grid.csv", grid_rows(wb.grids, amp));
  const double peak = amp.cwiseAbs2().maxCoeff();
  const auto eval = design_evaluator(d, wb);
  const Grids& g = wb.grids;
  for (const auto& cut : co.cuts()) {
    std::vector<GridRow> rows;
    auto add = [&](double f, Direction dir) {
      const double b = eval(f, dir);
      rows.push_back({f, dir.theta, dir.phi, b, npb_db(peak > 0.0 ? b * b / peak : 0.0)});
    };
    if (cut.axis == PlotCut::frequency) {
      for (Index l = 0; l < g.L(); ++l) add(cut.value, g.angle(l));
    } else {
      for (Index k = 0; k < g.K(); ++k)
        for (Index a = 0; a < g.L_side(); ++a)
          add(g.freqs(k), cut.axis == PlotCut::elevation ? Direction{cut.value, g.axis(a)} : Direction{g.axis(a), cut.value});
    }
    write_grid_rows(dir / ("cut_" + detail::cut_label(cut) + ".csv"), rows);
  }
}

int cmd_check_narrowband(const std::string& path, std::optional<double> threshold) {
  const Scenario sc = load_scenario(path);
  const RisSystem sys = scenario_system(sc);
  const double metric =
      narrowband_metric(sys.channel, sys.ris, sc.W_hz, field_of_view_grid(sc.half_fov_rad, sc.fov_points));
  const double d_ris = enclosing_ball_diameter(sys.ris.positions);
  const double d_src = enclosing_ball_diameter(sc.sources.positions);
  const double bound = narrowband_sufficient_metric(d_ris, d_src, sc.W_hz);
  const double thr = threshold.value_or(sc.narrowband_threshold);
  std::printf("narrowband_metric = %.6g\n", metric);
  std::printf("sufficient_metric = %.6g\n", bound);
  std::printf("ris_diameter_m = %.6g\nsources_diameter_m = %.6g\n", d_ris, d_src);
  std::printf("threshold = %.6g\n", thr);
  std::printf("classification = %s\n", metric < thr ? "narrowband" : "broadband");
  return 0;
}

struct SynthArgs {
  std::string scenario;
  std::string out;
  std::optional<std::string> arch;
  bool constant_modulus = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iters;
  CutOptions cuts;
};

int cmd_synthesize(const SynthArgs& a) {
  Scenario sc = load_scenario(a.scenario);
  if (a.arch) sc.architecture = *a.arch;
  if (a.constant_modulus) sc.constant_modulus = true;
  SynthesisOptions opt{sc.tol, sc.max_iters, sc.seed};
  if (a.seed) opt.seed = *a.seed;
  if (a.tol) opt.tol = *a.tol;
  if (a.max_iters) opt.max_iterations = *a.max_iters;
  const fs::path dir(a.out);
  prepare_dir(dir);

  const Workbench wb(sc);
  const std::string arch = sc.architecture + (sc.constant_modulus ? "-cm" : "");
  const SpectrumCache c = wb.cache(arch);
  const double P = sc.P_w;
  auto run = [&](auto&& synth) {
    auto [d, r] = synth(c, P, opt, std::nullopt);
    return std::pair{store(d), r};
  };
  std::pair<StoredDesign, SynthesisReport> result;
  if (arch == "ris") result = run(synthesize_ris);
  else if (arch == "ris-cm") result = run(synthesize_ris_cm);
  else if (arch == "mimo") result = run(synthesize_mimo);
  else if (arch == "mimo-cm") result = run(synthesize_mimo_cm);
  else if (arch == "pa") result = run(synthesize_pa);
  else if (arch == "pa-cm") result = run(synthesize_pa_cm);
  else throw std::invalid_argument("unknown architecture '" + arch + "'");
  const auto& [design, rep] = result;

  write_design(dir, design);
  write_report(dir / "report.txt", rep);
  export_grids(dir, wb, design, design_inner(design, c), a.cuts);
  std::printf("architecture = %s\nfinal_rse = %.10g\niterations = %d\ntermination = %s\nwall_time_s = %.3f\n",
              arch.c_str(), rep.final_rse, rep.iterations, to_string(rep.termination), rep.wall_time_s);
  return 0;
}

int cmd_evaluate(const std::string& scenario, const std::string& design_dir, const std::string& out,
                 const CutOptions& cuts) {
  const Workbench wb(load_scenario(scenario));
  const StoredDesign d = read_design(design_dir);
  check_feasible(d, wb);
  const SpectrumCache c = wb.cache(d.architecture);
  const CMat inner = design_inner(d, c);
  std::printf("architecture = %s\nrse = %.10g\n", d.architecture.c_str(), rse_of_inner(c, inner));
  if (!out.empty()) {
    prepare_dir(out);
    const RMat amp = inner.cwiseAbs();
    if (amp.maxCoeff() > 0.0) export_grids(out, wb, d, inner, cuts);
    else std::printf("note = beampattern is identically zero; no grid exported\n");
  }
  return 0;
}

int cmd_export_plots(const std::string& csv, const std::string& out, const CutOptions& co, double floor_db) {
  const auto rows = read_grid_csv(csv);
  prepare_dir(out);
  for (const auto& cut : co.cuts()) {
    const fs::path p = fs::path(out) / ("npb_" + detail::cut_label(cut) + ".gp");
    std::ofstream o(p, std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write '" + p.string() + "'");
    o << plot_script(rows, cut, floor_db);
    std::printf("%s\n", p.string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmit beampattern synthesis for RIS-based, MIMO and phased-array architectures"};
  app.require_subcommand(1);

  std::string nb_path;
  std::optional<double> nb_threshold;
  auto* nb = app.add_subcommand("check-narrowband", "narrowband/broadband classification of a scenario");
  nb->add_option("scenario", nb_path, "scenario file")->required();
  nb->add_option("--threshold", nb_threshold, "metric below which the system counts as narrowband");

  SynthArgs sa;
  auto* sy = app.add_subcommand("synthesize", "run block-coordinate descent and export the design");
  sy->add_option("scenario", sa.scenario, "scenario file")->required();
  sy->add_option("--out", sa.out, "output directory")->required();
  sy->add_option("--arch", sa.arch, "ris, mimo or pa")->check(CLI::IsMember({"ris", "mimo", "pa"}));
  sy->add_flag("--constant-modulus", sa.constant_modulus, "constant-modulus waveforms");
  sy->add_option("--seed", sa.seed, "RNG seed");
  sy->add_option("--tol", sa.tol, "relative-change tolerance")->check(CLI::PositiveNumber);
  sy->add_option("--max-iters", sa.max_iters, "iteration cap")->check(CLI::PositiveNumber);
  sa.cuts.add_to(sy);

  std::string ev_scenario, ev_design, ev_out;
  CutOptions ev_cuts;
  auto* ev = app.add_subcommand("evaluate", "recompute the RSE of a stored design");
  ev->add_option("scenario", ev_scenario, "scenario file")->required();
  ev->add_option("design", ev_design, "design directory written by synthesize")->required();
  ev->add_option("--out", ev_out, "also export grid and cut CSVs here");
  ev_cuts.add_to(ev);

  std::string ep_csv, ep_out;
  double ep_floor = -40.0;
  CutOptions ep_cuts;
  auto* ep = app.add_subcommand("export-plots", "write gnuplot heatmap scripts from a grid CSV");
  ep->add_option("grid_csv", ep_csv, "grid CSV written by synthesize or evaluate")->required();
  ep->add_option("--out", ep_out, "output directory")->required();
  ep->add_option("--floor-db", ep_floor, "lower end of the color scale");
  ep_cuts.add_to(ep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*nb) return cmd_check_narrowband(nb_path, nb_threshold);
    if (*sy) return cmd_synthesize(sa);
    if (*ev) return cmd_evaluate(ev_scenario, ev_design, ev_out, ev_cuts);
    if (*ep) return cmd_export_plots(ep_csv, ep_out, ep_cuts, ep_floor);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

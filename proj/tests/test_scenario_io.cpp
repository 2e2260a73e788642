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
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace risbp;
using namespace risbp::testing;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const std::string& name) { return std::string(RISBP_SCENARIO_DIR) + "/" + name; }

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("risbp_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

Scenario tiny_scenario() {
  Scenario sc = load_scenario(scenario_path("small.scn"));
  sc.K = 4;
  sc.L_side = 4;
  sc.max_iters = 5;
  return sc;
}

}  // namespace

TEST(DefaultScenario, Dimensions) {
  const Scenario sc = default_scenario();
  const RisSystem sys = scenario_system(sc);
  EXPECT_EQ(sys.ris.size(), 100);
  EXPECT_EQ(sys.signal.J, 4);
  EXPECT_EQ(sys.signal.N, 64);
  EXPECT_EQ(sc.K, 128);
  EXPECT_EQ(scenario_grids(sc).L(), 1296);
  EXPECT_EQ(sc.P_w, 10.0);
  EXPECT_EQ(sc.tol, 1e-6);
  const auto& ch = std::get<LosChannelModel>(sys.channel.kind);
  EXPECT_EQ(ch.clamped_pairs(), 0);
}

TEST(DefaultScenario, ShippedFilesMatchBuiltins) {
  EXPECT_EQ(load_scenario(scenario_path("default.scn")), default_scenario());
  EXPECT_EQ(load_scenario(scenario_path("power_consistent.scn")),
            default_scenario(NarrowBeamReading::power_consistent));
}

TEST(ScenarioText, RoundTripOfShippedFiles) {
  for (const char* name :
       {"default.scn", "power_consistent.scn", "example1_1m.scn", "example1_20cm.scn", "single_element.scn", "small.scn"}) {
    const Scenario a = load_scenario(scenario_path(name));
    const Scenario b = parse_scenario(serialize_scenario(a));
    EXPECT_EQ(a, b) << name;
    EXPECT_EQ(serialize_scenario(a), serialize_scenario(b)) << name;
  }
}

TEST(ScenarioText, RoundTripWithTapsWeightsAndPositions) {
  Scenario sc = default_scenario();
  sc.ris_positions_m = {Vec3(0, -0.01, 0), Vec3(0, 0.01, 0)};
  sc.sources.positions.resize(1);
  sc.sources.boresights.resize(1);
  sc.sources.offsets = {1.25e-9};
  sc.channel_model = "taps";
  sc.taps = {{0, 0, {cplx{0.1, -0.2}, 1e-9}}, {1, 0, {cplx{1.0 / 3.0, 0.0}, 0.0}}};
  sc.weight.base = 0.5;
  sc.weight.emphasis.push_back({-1e7, 1e7, -0.1, 0.1, -0.2, 0.2, 4.0});
  sc.sampling = DesiredSampling::point;
  sc.architecture = "pa";
  sc.constant_modulus = true;
  sc.seed = 123456789012345ull;
  sc.ris_spacing_m = 0.0123456789;
  EXPECT_EQ(parse_scenario(serialize_scenario(sc)), sc);
  const RisSystem sys = scenario_system(sc);
  EXPECT_EQ(sys.ris.size(), 2);
  EXPECT_NEAR(std::abs(sys.channel.response(1, 0, 0.0, 3e9)), 1.0 / 3.0, 1e-15);
}

TEST(ScenarioText, DiagnosticsCarryLineNumbers) {
  const std::string base = "[geometry]\nsource = -1 0 0 1 0 0 0\n";
  auto line_of = [&](const std::string& text) {
    try {
      parse_scenario(text, "t.scn");
    } catch (const ScenarioError& e) {
      EXPECT_NE(std::string(e.what()).find("t.scn:"), std::string::npos);
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of(base + "bogus = 1\n"), 3);
  EXPECT_EQ(line_of(base + "[signal]\nW_hz = fast\n"), 4);
  EXPECT_EQ(line_of(base + "[nowhere]\n"), 3);
  EXPECT_EQ(line_of("ris_rows = 3\n"), 1);
  EXPECT_EQ(line_of(base + "[grid]\nK = 2.5\n"), 4);
  EXPECT_EQ(line_of(base + "[geometry]\nsource = 1 2 3\n"), 4);
  EXPECT_EQ(line_of(base + "[desired]\nbox = 1 0 0 1 0 1 1\n"), 4);
  EXPECT_EQ(line_of(base + "[options]\narchitecture = sonar\n"), 4);
  EXPECT_EQ(line_of(base + "[channel]\nmodel = taps\n"), 4);
  EXPECT_EQ(line_of("[geometry]\n"), 1);
  EXPECT_EQ(line_of(base + "[options]\nseed = -4\n"), 4);
  EXPECT_EQ(line_of(base + "[signal]\nP_w =\n"), 4);
}

TEST(ScenarioText, MinimalFileUsesDefaults) {
  const Scenario sc = parse_scenario("# comment only\n[geometry]\nsource = -1 0 0 1 0 0 0  # trailing\n");
  EXPECT_EQ(sc.K, 128);
  EXPECT_EQ(sc.ris_rows, 10);
  EXPECT_FALSE(sc.ris_spacing_m.has_value());
  EXPECT_TRUE(sc.desired.boxes.empty());
  EXPECT_THROW(load_scenario("/nonexistent/file.scn"), std::runtime_error);
}

TEST(VectorFile, RoundTripIsBitExact) {
  TempDir t;
  std::mt19937_64 rng(1);
  CVec v = random_complex(17, rng);
  v(3) = cplx{-0.0, 1e-310};
  const auto p = (t.path() / "v.bin").string();
  write_vector(p, v);
  const CVec w = read_vector(p);
  ASSERT_EQ(w.size(), v.size());
  EXPECT_EQ(std::memcmp(v.data(), w.data(), sizeof(cplx) * 17), 0);
  EXPECT_EQ(fs::file_size(p), 8u + 8u + 17u * 16u);
  write_vector(p, CVec());
  EXPECT_EQ(read_vector(p).size(), 0);
}

TEST(VectorFile, MalformedFilesAreRejected) {
  TempDir t;
  const auto p = t.path() / "v.bin";
  write_vector(p.string(), CVec::Ones(2));
  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  write_text(p, "XXXX" + bytes.substr(4));
  EXPECT_THROW(read_vector(p.string()), FormatError);
  write_text(p, bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_vector(p.string()), FormatError);
  write_text(p, bytes + "z");
  EXPECT_THROW(read_vector(p.string()), FormatError);
  EXPECT_THROW(read_vector((t.path() / "missing.bin").string()), std::runtime_error);
}

TEST(DesignFiles, RoundTripForEveryArchitecture) {
  TempDir t;
  std::mt19937_64 rng(2);
  const std::vector<StoredDesign> designs{
      store(RisDesign{random_complex(4, rng), random_unit(3, rng)}),
      store(CmRisDesign{RVec::Ones(2), random_unit(4, rng), random_unit(3, rng)}),
      store(MimoDesign{random_complex(6, rng)}),
      store(CmMimoDesign{RVec::Ones(3), random_unit(6, rng)}),
      store(PaDesign{random_complex(2, rng), random_unit(3, rng)}),
      store(CmPaDesign{random_unit(2, rng), random_unit(3, rng), 0.25}),
  };
  for (const auto& d : designs) {
    const fs::path dir = t.path() / d.architecture;
    fs::create_directories(dir);
    write_design(dir, d);
    const StoredDesign back = read_design(dir);
    EXPECT_EQ(back.architecture, d.architecture);
    ASSERT_EQ(back.vectors.size(), d.vectors.size());
    for (const auto& [name, v] : d.vectors) EXPECT_EQ(back.at(name), v) << d.architecture << " " << name;
  }
  write_text(t.path() / "ris" / "design.txt", "architecture = sonar\n");
  EXPECT_THROW(read_design(t.path() / "ris"), FormatError);
  EXPECT_THROW(designs[0].at("zeta"), FormatError);
}

TEST(Feasibility, TamperedDesignsAreRejected) {
  const Workbench wb(tiny_scenario());
  const Index M = wb.system.ris.size(), J = wb.system.signal.J, N = wb.system.signal.N;
  StoredDesign ok = store(RisDesign{CVec::Zero(J * N), CVec::Ones(M)});
  EXPECT_NO_THROW(check_feasible(ok, wb));
  StoredDesign hot = ok;
  hot.vectors["s"] = CVec::Constant(J * N, 100.0);
  EXPECT_THROW(check_feasible(hot, wb), std::domain_error);
  StoredDesign bent = ok;
  bent.vectors["x"](0) = 0.9;
  EXPECT_THROW(check_feasible(bent, wb), std::domain_error);
  StoredDesign shrunk = ok;
  shrunk.vectors["s"] = CVec::Zero(J * N - 1);
  EXPECT_THROW(check_feasible(shrunk, wb), std::invalid_argument);
  StoredDesign pa = store(CmPaDesign{CVec::Ones(N), CVec::Ones(M), 100.0});
  EXPECT_THROW(check_feasible(pa, wb), std::domain_error);
}

TEST(Evaluation, EvaluatorAgreesWithGridResponse) {
  const Workbench wb(tiny_scenario());
  std::mt19937_64 rng(3);
  const Index M = wb.system.ris.size(), J = wb.system.signal.J, N = wb.system.signal.N;
  const std::vector<StoredDesign> designs{store(RisDesign{random_complex(J * N, rng), random_unit(M, rng)}),
                                          store(MimoDesign{random_complex(M * N, rng)}),
                                          store(CmPaDesign{random_unit(N, rng), random_unit(M, rng), 0.3})};
  for (const auto& d : designs) {
    const SpectrumCache c = wb.cache(d.architecture);
    const CMat inner = design_inner(d, c);
    const auto eval = design_evaluator(d, wb);
    for (Index k = 0; k < wb.grids.K(); ++k)
      for (Index l = 0; l < wb.grids.L(); l += 3)
        EXPECT_NEAR(eval(wb.grids.freqs(k), wb.grids.angle(l)), std::abs(inner(k, l)), 1e-12 * max_abs(inner))
            << d.architecture;
  }
}

TEST(Evaluation, ZeroDesignScoresOne) {
  const Workbench wb(tiny_scenario());
  const Index M = wb.system.ris.size(), J = wb.system.signal.J, N = wb.system.signal.N;
  const StoredDesign d = store(RisDesign{CVec::Zero(J * N), CVec::Ones(M)});
  EXPECT_NEAR(rse_of_inner(wb.cache("ris"), design_inner(d, wb.cache("ris"))), 1.0, 1e-12);
}

TEST(Report, RoundTrip) {
  TempDir t;
  SynthesisReport r;
  r.architecture = "pa-cm";
  r.trajectory = {1.0, 0.5, 0.25 + 1e-17};
  r.block_trace = {{"init", 1.0}, {"rho", 0.7}};
  r.final_rse = 0.123456789012345678;
  r.iterations = 2;
  r.termination = Termination::variables_converged;
  r.seed = 77;
  write_report(t.path() / "report.txt", r);
  const auto f = read_report_fields(t.path() / "report.txt");
  EXPECT_EQ(f.at("architecture"), "pa-cm");
  EXPECT_EQ(std::stod(f.at("final_rse")), r.final_rse);
  EXPECT_EQ(f.at("termination"), "variables-converged");
  EXPECT_EQ(f.at("seed"), "77");
  EXPECT_EQ(read_report_trajectory(t.path() / "report.txt"), r.trajectory);
}

TEST(GridCsv, RoundTripAndFloor) {
  TempDir t;
  const Grids g = build_grids(2, 3, 1e8);
  RMat amp = RMat::Ones(2, 9);
  amp(0, 0) = 0.0;
  amp(1, 4) = 2.0;
  const auto rows = grid_rows(g, amp);
  ASSERT_EQ(rows.size(), 18u);
  EXPECT_EQ(rows[0].npb_db, kNpbFloorDb);
  EXPECT_EQ(rows[13].npb_db, 0.0);
  for (const auto& r : rows) EXPECT_LE(r.npb_db, 0.0);
  write_grid_rows(t.path() / "g.csv", rows);
  const auto back = read_grid_csv(t.path() / "g.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].f, rows[i].f);
    EXPECT_EQ(back[i].theta, rows[i].theta);
    EXPECT_EQ(back[i].npb_db, rows[i].npb_db);
  }
}

TEST(GridCsv, MalformedInputsAreRejected) {
  TempDir t;
  write_text(t.path() / "a.csv", "f,theta\n1,2\n");
  EXPECT_THROW(read_grid_csv(t.path() / "a.csv"), FormatError);
  write_text(t.path() / "b.csv", std::string(kGridHeader) + "\n1,2,3,4\n");
  EXPECT_THROW(read_grid_csv(t.path() / "b.csv"), FormatError);
  write_text(t.path() / "c.csv", std::string(kGridHeader) + "\n1,2,x,4,5\n");
  EXPECT_THROW(read_grid_csv(t.path() / "c.csv"), FormatError);
}

TEST(PlotScript, ColorbarTopsAtZeroDecibels) {
  const Grids g = build_grids(2, 4, 1e8);
  RMat amp = RMat::Constant(2, 16, 0.5);
  amp(1, 5) = 1.0;
  const std::string s = plot_script(grid_rows(g, amp), {PlotCut::frequency, 25e6});
  EXPECT_NE(s.find("set cbrange [-40:0]"), std::string::npos);
  EXPECT_NE(s.find("splot $data"), std::string::npos);
  EXPECT_NE(s.find("frequency_25MHz.png"), std::string::npos);
}

TEST(PlotScript, ConstantGridIsFlat) {
  const Grids g = build_grids(3, 4, 1e8);
  const std::string s = plot_script(grid_rows(g, RMat::Constant(3, 16, 2.0)), {PlotCut::elevation, -0.4});
  const auto begin = s.find("EOD\n") + 4;
  const auto end = s.find("EOD\n", begin);
  std::istringstream data(s.substr(begin, end - begin));
  double x, y, z;
  int n = 0;
  while (data >> x >> y >> z) {
    EXPECT_EQ(z, 0.0);
    ++n;
  }
  EXPECT_EQ(n, 3 * 4);
}

TEST(PlotScript, CutSnapsToNearestGridValue) {
  const Grids g = build_grids(2, 4, 1e8);
  const std::string s = plot_script(grid_rows(g, RMat::Ones(2, 16)), {PlotCut::azimuth, 0.3});
  EXPECT_NE(s.find("NPB at azimuth = 22.5 deg"), std::string::npos);
}

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

#include "risbp/channel.hpp"
#include "risbp/scenario.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace risbp;

namespace {

std::string scenario_path(const std::string& name) { return std::string(RISBP_SCENARIO_DIR) + "/" + name; }

double scenario_metric(const Scenario& sc) {
  const RisSystem sys = scenario_system(sc);
  return narrowband_metric(sys.channel, sys.ris, sc.W_hz, field_of_view_grid(sc.half_fov_rad, sc.fov_points));
}

Scenario scaled(Scenario sc, double s) {
  if (sc.ris_spacing_m) *sc.ris_spacing_m *= s;
  for (auto& p : sc.ris_positions_m) p *= s;
  for (auto& p : sc.sources.positions) p *= s;
  return sc;
}

}  // namespace

TEST(TapChannel, SingleUnitTapIsFlat) {
  TapChannel t(1, 1);
  t.at(0, 0).push_back({1.0, 0.0});
  for (double f : {1e6, 3e9, 7.7e9}) EXPECT_EQ(evaluate_tap_channel(t, 0, 0, f), cplx(1.0, 0.0));
}

TEST(TapChannel, ZeroFrequencySumsGains) {
  TapChannel t(2, 1);
  t.at(1, 0) = {{cplx{0.5, 0.25}, 1e-9}, {cplx{-0.1, 2.0}, 3e-9}, {cplx{1.0, 0.0}, 0.0}};
  const cplx g = evaluate_tap_channel(t, 1, 0, 0.0);
  EXPECT_NEAR(std::abs(g - cplx{1.4, 2.25}), 0.0, 1e-15);
}

TEST(TapChannel, OppositePhasesCancel) {
  const double f = 3e9;
  TapChannel t(1, 1);
  t.at(0, 0) = {{1.0, 0.0}, {1.0, 1.0 / (2.0 * f)}};
  EXPECT_LT(std::abs(evaluate_tap_channel(t, 0, 0, f)), 1e-15);
}

TEST(TapChannel, IndexOutOfRange) {
  TapChannel t(2, 3);
  EXPECT_THROW(t.at(2, 0), std::invalid_argument);
  EXPECT_THROW(t.at(0, 3), std::invalid_argument);
  EXPECT_THROW(t.at(-1, 0), std::invalid_argument);
}

TEST(TapChannel, ValidateRequiresTapsAndNonnegativeDelays) {
  TapChannel t(1, 2);
  t.at(0, 0).push_back({1.0, 0.0});
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t.at(0, 1).push_back({1.0, -1e-9});
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t.at(0, 1).back().delay = 1e-9;
  EXPECT_NO_THROW(t.validate());
}

namespace {

RisGeometry line_ris(double y) {
  RisGeometry g;
  g.positions = {Vec3(0, -y, 0), Vec3(0, 0, 0), Vec3(0, y, 0)};
  return g;
}

SourceGeometry one_source(const Vec3& pos, const Vec3& boresight) {
  SourceGeometry s;
  s.positions = {pos};
  s.boresights = {boresight};
  s.offsets = {0.0};
  return s;
}

}  // namespace

TEST(LosChannel, MatchesClosedFormOnAndOffAxis) {
  const double y = 0.3;
  const LosChannelModel ch(line_ris(y), one_source(Vec3(-1, 0, 0), Vec3(1, 0, 0)));
  EXPECT_EQ(ch.clamped_pairs(), 0);
  for (double f : {2.95e9, 3.0e9, 3.05e9}) {
    const double lam = kSpeedOfLight / f;
    for (Index i = 0; i < 3; ++i) {
      const double yi = (static_cast<double>(i) - 1.0) * y;
      const double d = std::sqrt(1.0 + yi * yi);
      const double c = 1.0 / d;  // cosine of the off-axis angle, seen from both ends
      const double power = 28.0 * std::pow(c, 13) * lam * lam / (4.0 * kPi) * 4.0 * c;
      const cplx expect = std::polar(1.0, -2.0 * kPi * f * d / kSpeedOfLight) / std::sqrt(4.0 * kPi * d * d) *
                          std::sqrt(power);
      EXPECT_LT(std::abs(ch.evaluate(i, 0, f) - expect), 1e-14 * std::abs(expect));
    }
  }
}

TEST(LosChannel, BacklobePairsAreClampedAndCounted) {
  const LosChannelModel ch(line_ris(0.1), one_source(Vec3(-1, 0, 0), Vec3(-1, 0, 0)));
  EXPECT_EQ(ch.clamped_pairs(), 3);
  for (Index i = 0; i < 3; ++i) EXPECT_EQ(ch.evaluate(i, 0, 3e9), cplx{});
}

TEST(LosChannel, RejectsCoincidentSourceAndBadIndex) {
  EXPECT_THROW(LosChannelModel(line_ris(0.1), one_source(Vec3::Zero(), Vec3::UnitX())), std::invalid_argument);
  const LosChannelModel ch(line_ris(0.1), one_source(Vec3(-1, 0, 0), Vec3::UnitX()));
  EXPECT_THROW(ch.evaluate(3, 0, 3e9), std::invalid_argument);
  EXPECT_THROW(ch.evaluate(0, 1, 3e9), std::invalid_argument);
}

TEST(ChannelModel, OffsetsShiftPhaseAndDelays) {
  TapChannel t(1, 2);
  t.at(0, 0).push_back({1.0, 2e-9});
  t.at(0, 1).push_back({1.0, 2e-9});
  ChannelModel ch{t, {0.0, 5e-9}};
  const double f = 1.3e7, fc = 3e9;
  const cplx ratio = ch.response(0, 1, f, fc) / ch.response(0, 0, f, fc);
  EXPECT_LT(std::abs(ratio - std::polar(1.0, -2.0 * kPi * f * 5e-9)), 1e-13);
  EXPECT_DOUBLE_EQ(ch.delays(0, 1).front(), 7e-9);
  EXPECT_DOUBLE_EQ(ch.delays(0, 0).front(), 2e-9);
}

TEST(DelayStats, EqualDelaysCollapse) {
  TapChannel t(2, 1);
  t.at(0, 0).push_back({1.0, 4e-9});
  t.at(1, 0).push_back({1.0, 4e-9});
  const auto st = delay_stats(ChannelModel{t, {}});
  EXPECT_DOUBLE_EQ(st.delta, 4e-9);
  EXPECT_EQ(st.at(0, 0).front(), 0.0);
  EXPECT_EQ(st.at(1, 0).front(), 0.0);
}

TEST(DelayStats, TwoPointSpreadIsSymmetric) {
  TapChannel t(1, 1);
  t.at(0, 0) = {{1.0, 1e-6}, {1.0, 3e-6}};
  const auto st = delay_stats(ChannelModel{t, {}});
  EXPECT_NEAR(st.delta, 2e-6, 1e-21);
  EXPECT_NEAR(st.at(0, 0)[0], -1e-6, 1e-21);
  EXPECT_NEAR(st.at(0, 0)[1], 1e-6, 1e-21);
}

TEST(DelayStats, OffsetsAreSymmetricOnRandomChannels) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1e-8);
  for (int t = 0; t < 20; ++t) {
    TapChannel tc(4, 3);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 3; ++j)
        for (int q = 0; q < 1 + t % 3; ++q) tc.at(i, j).push_back({1.0, u(rng)});
    const auto st = delay_stats(ChannelModel{tc, {u(rng), u(rng), u(rng)}});
    double lo = 1, hi = -1;
    for (const auto& v : st.offsets)
      for (double d : v) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    EXPECT_NEAR(hi, -lo, 1e-22);
  }
}

TEST(NarrowbandMetric, PointSurfaceWithFlatChannelIsZero) {
  RisGeometry g;
  g.positions = {Vec3::Zero()};
  TapChannel t(1, 1);
  t.at(0, 0).push_back({1.0, 3e-9});
  EXPECT_EQ(narrowband_metric(ChannelModel{t, {}}, g, 1e8, field_of_view_grid(kPi / 2, 31)), 0.0);
}

TEST(NarrowbandMetric, ExampleOneAtOneMetre) {
  const Scenario sc = load_scenario(scenario_path("example1_1m.scn"));
  const double m = scenario_metric(sc);
  EXPECT_NEAR(m, 0.49, 0.049);
}

TEST(NarrowbandMetric, ExampleOneScalesExactly) {
  const double m1 = scenario_metric(load_scenario(scenario_path("example1_1m.scn")));
  const double m02 = scenario_metric(load_scenario(scenario_path("example1_20cm.scn")));
  EXPECT_NEAR(m02 / m1, 0.2, 1e-12);
  EXPECT_NEAR(m02, 0.098, 0.0098);
}

TEST(NarrowbandMetric, LinearUnderUniformScaling) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> s(0.05, 3.0);
  const Scenario base = load_scenario(scenario_path("example1_1m.scn"));
  Scenario small = base;
  small.fov_points = 25;
  const double m = scenario_metric(small);
  for (int t = 0; t < 5; ++t) {
    const double k = s(rng);
    EXPECT_NEAR(scenario_metric(scaled(small, k)) / m, k, 1e-11 * k);
  }
}

TEST(NarrowbandMetric, RejectsMismatchedInputs) {
  TapChannel t(2, 1);
  t.at(0, 0).push_back({1.0, 0.0});
  t.at(1, 0).push_back({1.0, 0.0});
  RisGeometry g;
  g.positions = {Vec3::Zero()};
  EXPECT_THROW(narrowband_metric(ChannelModel{t, {}}, g, 1e8, field_of_view_grid(1.0, 3)), std::invalid_argument);
  EXPECT_THROW(narrowband_metric(ChannelModel{t, {}}, g, 1e8, {}), std::invalid_argument);
}

TEST(SufficientMetric, HandValues) {
  EXPECT_EQ(narrowband_sufficient_metric(0.0, 0.0, 1e8), 0.0);
  EXPECT_NEAR(narrowband_sufficient_metric(1.0, 1.0, 1e8), 1e8 * 3.0 / kSpeedOfLight, 1e-15);
  EXPECT_NEAR(narrowband_sufficient_metric(1.0, 1.0, 1e8), 1.0007, 1e-4);
  EXPECT_THROW(narrowband_sufficient_metric(-1.0, 0.0, 1e8), std::invalid_argument);
}

TEST(SufficientMetric, BoundsTheExactMetric) {
  const Scenario sc = load_scenario(scenario_path("example1_1m.scn"));
  const RisSystem sys = scenario_system(sc);
  const double bound = narrowband_sufficient_metric(enclosing_ball_diameter(sys.ris.positions),
                                                    enclosing_ball_diameter(sc.sources.positions), sc.W_hz);
  EXPECT_GE(bound, scenario_metric(sc));
}

TEST(FieldOfViewGrid, IncludesEndpoints) {
  const auto g = field_of_view_grid(kPi / 3, 121);
  ASSERT_EQ(g.size(), 121u * 121u);
  EXPECT_DOUBLE_EQ(g.front().theta, -kPi / 3);
  EXPECT_DOUBLE_EQ(g.back().phi, kPi / 3);
}

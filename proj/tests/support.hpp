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

#include "risbp/synth.hpp"

#include <random>

namespace risbp::testing {

inline double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const CVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// max |a - b| / max |b|.
template <typename A, typename B>
double rel_diff(const A& a, const B& b) {
  const double ref = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / (ref > 0.0 ? ref : 1.0);
}

inline CVec random_complex(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CVec v(n);
  for (Index i = 0; i < n; ++i) v(i) = cplx{g(rng), g(rng)};
  return v;
}

inline CVec random_unit(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  CVec v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::polar(1.0, u(rng));
  return v;
}

/// Small randomized RIS system with matching grids, desired samples, weights
/// and caches for both the RIS and the fully digital architectures.
struct SmallCase {
  RisSystem sys;
  Grids grids;
  SpectrumCache ris;
  SpectrumCache array;
  double P = 1.0;
};

inline RisSystem random_system(std::mt19937_64& rng, Index rows, Index cols, Index J, Index N, bool taps) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double W = 1e8, fc = 3e9;
  RisSystem sys;
  sys.ris = build_planar_ris(static_cast<int>(rows), static_cast<int>(cols), half_wavelength_spacing(fc, W));
  SourceGeometry src;
  for (Index j = 0; j < J; ++j) {
    src.positions.emplace_back(-0.3, 0.1 * u(rng), 0.1 * u(rng));
    src.boresights.emplace_back(1.0, 0.0, 0.0);
    src.offsets.push_back(0.0);
  }
  sys.signal = SignalSpec::make(J, W, static_cast<double>(N) / W, fc, 1.0 + 0.5 * u(rng));
  if (taps) {
    TapChannel t(sys.ris.size(), J);
    std::uniform_real_distribution<double> delay(0.0, 5e-9);
    for (Index i = 0; i < sys.ris.size(); ++i)
      for (Index j = 0; j < J; ++j) {
        const int n = 1 + static_cast<int>(rng() % 3);
        for (int q = 0; q < n; ++q) t.at(i, j).push_back({cplx{u(rng), u(rng)} * 3e-3, delay(rng)});
      }
    sys.channel.kind = std::move(t);
  } else {
    sys.channel.kind = LosChannelModel(sys.ris, src);
  }
  sys.channel.offsets = src.offsets;
  return sys;
}

/// Desired samples are the amplitude of a random feasible design perturbed
/// and masked, so the optimum is neither trivial nor out of reach.
inline RMat reachable_desired(const CMat& inner, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RMat D(inner.rows(), inner.cols());
  for (Index k = 0; k < D.rows(); ++k)
    for (Index l = 0; l < D.cols(); ++l) D(k, l) = u(rng) < 0.3 ? 0.0 : std::abs(inner(k, l)) * (0.5 + u(rng));
  if (D.maxCoeff() == 0.0) D(0, 0) = std::abs(inner(0, 0)) + 1e-6;
  return D;
}

inline SmallCase random_case(std::mt19937_64& rng, Index rows, Index cols, Index J, Index N, Index K, Index L_side,
                             bool taps) {
  SmallCase sc;
  sc.sys = random_system(rng, rows, cols, J, N, taps);
  sc.P = sc.sys.signal.P;
  sc.grids = build_grids(K, L_side, sc.sys.signal.W);
  const RMat ones = RMat::Ones(K, sc.grids.L());
  const RMat flat = build_weights(ones, sc.grids);

  const SpectrumCache probe_ris = build_ris_cache(sc.sys, sc.grids, ones, flat);
  const CVec s = random_complex(J * N, rng, std::sqrt(sc.P / static_cast<double>(J)));
  const RMat Dr = reachable_desired(ris_inner(probe_ris, s, random_unit(sc.sys.ris.size(), rng)), rng);
  sc.ris = build_ris_cache(sc.sys, sc.grids, Dr, build_weights(Dr, sc.grids));

  const Index M = sc.sys.ris.size();
  const SpectrumCache probe_arr = build_array_cache(sc.sys.ris, sc.sys.signal, sc.grids, ones, flat);
  const CVec zeta = random_complex(M * N, rng, std::sqrt(sc.P / static_cast<double>(M)));
  const RMat Da = reachable_desired(mimo_inner(probe_arr, zeta), rng);
  sc.array = build_array_cache(sc.sys.ris, sc.sys.signal, sc.grids, Da, build_weights(Da, sc.grids));
  return sc;
}

/// Random dimensions within M <= 9, J <= 2, N <= 8, K <= 8, L <= 25.
inline SmallCase random_small_case(std::mt19937_64& rng) {
  auto pick = [&](Index lo, Index hi) { return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  const Index rows = pick(1, 3), cols = pick(1, 3);
  return random_case(rng, rows, cols, pick(1, 2), pick(1, 8), pick(1, 8), pick(2, 5), rng() % 2 == 0);
}

/// Every block update in the trace is non-increasing within `slack` relative.
inline bool monotone(const SynthesisReport& r, double slack, std::string* where = nullptr) {
  for (std::size_t i = 1; i < r.block_trace.size(); ++i) {
    const double a = r.block_trace[i - 1].objective, b = r.block_trace[i].objective;
    if (b > a + slack * std::max(std::abs(a), 1e-300)) {
      if (where) *where = "block " + r.block_trace[i].block + " at trace entry " + std::to_string(i);
      return false;
    }
  }
  return true;
}

inline bool unit_modulus(const CVec& v, double tol = 1e-12) {
  for (Index i = 0; i < v.size(); ++i)
    if (std::abs(std::abs(v(i)) - 1.0) > tol) return false;
  return true;
}

inline bool within(double energy, double budget) { return energy <= budget * (1.0 + 1e-9); }

inline bool feasible(const SpectrumCache& c, double P, const RisDesign& d) {
  return d.s.size() == c.J * c.N && within(d.s.squaredNorm(), static_cast<double>(c.N) * P) && unit_modulus(d.x);
}
inline bool feasible(const SpectrumCache& c, double P, const CmRisDesign& d) {
  return d.u.size() == c.J && d.u.minCoeff() >= 0.0 && within(d.u.squaredNorm(), P) && unit_modulus(d.omega) &&
         unit_modulus(d.x) && within(d.s().squaredNorm(), static_cast<double>(c.N) * P);
}
inline bool feasible(const SpectrumCache& c, double P, const MimoDesign& d) {
  return d.zeta.size() == c.M * c.N && within(d.zeta.squaredNorm(), static_cast<double>(c.N) * P);
}
inline bool feasible(const SpectrumCache& c, double P, const CmMimoDesign& d) {
  return d.gamma.size() == c.M && d.gamma.minCoeff() >= 0.0 && within(d.gamma.squaredNorm(), P) &&
         unit_modulus(d.xi);
}
inline bool feasible(const SpectrumCache& c, double P, const PaDesign& d) {
  return d.rho.size() == c.N && within(d.rho.squaredNorm(), static_cast<double>(c.N) * P / static_cast<double>(c.M)) &&
         unit_modulus(d.chi);
}
inline bool feasible(const SpectrumCache& c, double P, const CmPaDesign& d) {
  return unit_modulus(d.rho) && unit_modulus(d.chi) && d.alpha >= 0.0 &&
         within(d.alpha * d.alpha, P / static_cast<double>(c.M));
}

struct RunCheck {
  std::string architecture;
  bool monotone = true;
  bool feasible = true;
  std::string detail;
};

/// Runs a synthesizer with iteration caps 1..`prefix` (every intermediate
/// iterate, since runs are deterministic) and once to convergence; checks
/// feasibility of each returned design and block-wise descent of the full run.
template <typename Synth>
RunCheck check_run(const char* name, Synth&& synth, const SpectrumCache& c, double P, SynthesisOptions opt,
                   int prefix = 3) {
  RunCheck out;
  out.architecture = name;
  for (int cap = 1; cap <= prefix; ++cap) {
    SynthesisOptions o = opt;
    o.max_iterations = cap;
    const auto [d, r] = synth(c, P, o, std::nullopt);
    if (!feasible(c, P, d)) {
      out.feasible = false;
      out.detail = "infeasible iterate " + std::to_string(cap);
    }
  }
  const auto [d, r] = synth(c, P, opt, std::nullopt);
  if (!feasible(c, P, d)) {
    out.feasible = false;
    out.detail = "infeasible final design";
  }
  std::string where;
  if (!monotone(r, 1e-9, &where)) {
    out.monotone = false;
    out.detail = where;
  }
  return out;
}

}  // namespace risbp::testing

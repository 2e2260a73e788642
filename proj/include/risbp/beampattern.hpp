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

#include "risbp/channel.hpp"
#include "risbp/geometry.hpp"

#include <functional>
#include <limits>
#include <set>

namespace risbp {

/// Cell-centered frequency and angle grids. Angles are indexed
/// ℓ = a * L_side + b with θ = axis[a], φ = axis[b].
struct Grids {
  RVec freqs;  // baseband, Hz
  RVec axis;   // angle samples shared by θ and φ, rad
  double W = 1.0;

  Index K() const { return freqs.size(); }
  Index L_side() const { return axis.size(); }
  Index L() const { return axis.size() * axis.size(); }
  Direction angle(Index l) const { return {axis(l / L_side()), axis(l % L_side())}; }
  std::vector<Direction> angles() const {
    std::vector<Direction> out;
    out.reserve(static_cast<std::size_t>(L()));
    for (Index l = 0; l < L(); ++l) out.push_back(angle(l));
    return out;
  }
  double freq_step() const { return W / static_cast<double>(K()); }
  double angle_step() const { return kPi / static_cast<double>(L_side()); }
};

inline Grids build_grids(Index K, Index L_side, double W) {
  if (K < 1 || L_side < 1) throw std::invalid_argument("build_grids: K and L_side must be >= 1");
  if (!(W > 0.0)) throw std::invalid_argument("build_grids: W must be positive");
  Grids g;
  g.W = W;
  g.freqs.resize(K);
  for (Index k = 0; k < K; ++k) g.freqs(k) = -W / 2 + (static_cast<double>(k) + 0.5) * W / static_cast<double>(K);
  g.axis.resize(L_side);
  for (Index a = 0; a < L_side; ++a)
    g.axis(a) = -kPi / 2 + (static_cast<double>(a) + 0.5) * kPi / static_cast<double>(L_side);
  return g;
}

/// Axis-aligned region of the (f, θ, φ) domain with a constant value.
/// Membership is closed on the lower edge and open on the upper edge.
struct Box {
  double f_lo = 0, f_hi = 0;
  double theta_lo = 0, theta_hi = 0;
  double phi_lo = 0, phi_hi = 0;
  double value = 0;

  bool contains(double f, Direction d) const {
    return f >= f_lo && f < f_hi && d.theta >= theta_lo && d.theta < theta_hi && d.phi >= phi_lo && d.phi < phi_hi;
  }
};

/// Piecewise-constant desired amplitude D(f; θ, φ); overlapping boxes take the
/// largest amplitude.
struct DesiredPattern {
  std::vector<Box> boxes;
};

/// Weighting function w̃: the largest value among the emphasis boxes that
/// contain the point, or `base` elsewhere.
struct WeightFunction {
  double base = 1.0;
  std::vector<Box> emphasis;

  double operator()(double f, Direction d) const {
    double v = -1.0;
    for (const auto& b : emphasis)
      if (b.contains(f, d)) v = std::max(v, b.value);
    return v < 0.0 ? base : v;
  }
};

inline double eval_desired(const DesiredPattern& D, double f, Direction dir) {
  double v = 0.0;
  for (const auto& b : D.boxes)
    if (b.contains(f, dir)) v = std::max(v, b.value);
  return v;
}

namespace detail {

// Breakpoints of the box edges inside [lo, hi], including both ends.
inline std::vector<double> breakpoints(double lo, double hi, const std::vector<Box>& boxes,
                                       double Box::*lo_edge, double Box::*hi_edge) {
  std::set<double> pts{lo, hi};
  for (const auto& b : boxes) {
    for (double e : {b.*lo_edge, b.*hi_edge})
      if (e > lo && e < hi) pts.insert(e);
  }
  return {pts.begin(), pts.end()};
}

/// Exact ∫∫∫ D² cos θ dθ dφ df over an axis-aligned region of the domain: the
/// integrand is constant on the sub-cells cut by the box edges.
inline double integrate_desired_sq(const DesiredPattern& D, double f0, double f1, double t0, double t1,
                                   double p0, double p1) {
  const auto fs = breakpoints(f0, f1, D.boxes, &Box::f_lo, &Box::f_hi);
  const auto ts = breakpoints(t0, t1, D.boxes, &Box::theta_lo, &Box::theta_hi);
  const auto ps = breakpoints(p0, p1, D.boxes, &Box::phi_lo, &Box::phi_hi);
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < fs.size(); ++a) {
    const double fm = 0.5 * (fs[a] + fs[a + 1]);
    for (std::size_t b = 0; b + 1 < ts.size(); ++b) {
      const double tm = 0.5 * (ts[b] + ts[b + 1]);
      const double st = std::sin(ts[b + 1]) - std::sin(ts[b]);
      for (std::size_t c = 0; c + 1 < ps.size(); ++c) {
        const double v = eval_desired(D, fm, {tm, 0.5 * (ps[c] + ps[c + 1])});
        if (v != 0.0) total += v * v * (fs[a + 1] - fs[a]) * st * (ps[c + 1] - ps[c]);
      }
    }
  }
  return total;
}

}  // namespace detail

/// Radiated power (1/4π) ∭ D² cos θ dθ dφ df over [-W/2, W/2] × [-π/2, π/2]².
inline double desired_power(const DesiredPattern& D, double W) {
  return detail::integrate_desired_sq(D, -W / 2, W / 2, -kPi / 2, kPi / 2, -kPi / 2, kPi / 2) / (4.0 * kPi);
}

enum class DesiredSampling {
  point,         // D evaluated at the grid node
  cell_average,  // D² averaged (cos θ-weighted) over the grid cell around the node
};

/// Samples of D on the grid, K x L. With cell averaging a node whose cell is
/// entirely inside a box gets exactly the box amplitude; cells cut by a box
/// edge get the root-mean-square amplitude over the cell.
inline RMat sample_desired(const DesiredPattern& D, const Grids& g, DesiredSampling mode = DesiredSampling::cell_average) {
  RMat out(g.K(), g.L());
  const double df = g.freq_step();
  const double da = g.angle_step();
  for (Index k = 0; k < g.K(); ++k) {
    for (Index l = 0; l < g.L(); ++l) {
      const Direction dir = g.angle(l);
      if (mode == DesiredSampling::point) {
        out(k, l) = eval_desired(D, g.freqs(k), dir);
        continue;
      }
      const double f0 = g.freqs(k) - df / 2, t0 = dir.theta - da / 2, p0 = dir.phi - da / 2;
      const double measure = df * (std::sin(t0 + da) - std::sin(t0)) * da;
      out(k, l) = std::sqrt(detail::integrate_desired_sq(D, f0, f0 + df, t0, t0 + da, p0, p0 + da) / measure);
    }
  }
  return out;
}

class NormalizationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// w_kℓ = (W π² / (K L)) w̃ cos θ_ℓ / Z with Z chosen so that Σ w D² = 1.
inline RMat build_weights(const RMat& desired, const Grids& g, const WeightFunction& wt = {}) {
  if (desired.rows() != g.K() || desired.cols() != g.L())
    throw std::invalid_argument("build_weights: desired samples do not match the grid");
  const double cell = g.W * kPi * kPi / static_cast<double>(g.K() * g.L());
  RMat w(g.K(), g.L());
  double z = 0.0;
  for (Index k = 0; k < g.K(); ++k) {
    for (Index l = 0; l < g.L(); ++l) {
      const Direction dir = g.angle(l);
      w(k, l) = cell * wt(g.freqs(k), dir) * std::cos(dir.theta);
      z += w(k, l) * desired(k, l) * desired(k, l);
    }
  }
  if (!(z > 0.0)) throw NormalizationError("build_weights: desired pattern has zero weighted energy");
  return w / z;
}

/// σ̂(f) = (1/(W√T)) Σ_{n=1..N} s_n exp(-2πi n f / W) for stacked s = [s_1; ...; s_N].
inline CVec source_spectrum(const CVec& s, double f, const SignalSpec& spec) {
  if (s.size() != spec.J * spec.N) throw std::invalid_argument("source_spectrum: expected J*N samples");
  CVec out = CVec::Zero(spec.J);
  for (Index n = 0; n < spec.N; ++n)
    out += s.segment(n * spec.J, spec.J) * std::polar(1.0, -2.0 * kPi * static_cast<double>(n + 1) * f / spec.W);
  return out * spec.scale();
}

/// Physical description of the RIS-based transmitter.
struct RisSystem {
  RisGeometry ris;
  ChannelModel channel;
  SignalSpec signal;
};

/// Ω(f; θ, φ): M x J with entry G_ij(fc + f) Γ_i(θ, φ).
inline CMat channel_matrix(const RisSystem& sys, double f, Direction dir) {
  return sys.ris.element_pattern.amplitude(dir) * sys.channel.matrix(f, sys.signal.fc);
}

inline double amplitude_beampattern_ris(const RisSystem& sys, const CVec& s, const CVec& x, double f, Direction dir) {
  const CVec v = steering_vector(sys.ris, sys.signal.fc + f, dir);
  const CVec field = x.cwiseProduct(channel_matrix(sys, f, dir) * source_spectrum(s, f, sys.signal));
  return std::abs(v.dot(field));
}

/// Fully digital array on the same element positions with element amplitude
/// √(4 cos θ cos φ); ζ stacks the per-sample M-vectors.
inline double amplitude_beampattern_mimo(const RisGeometry& geom, const SignalSpec& spec, const CVec& zeta, double f,
                                         Direction dir) {
  const Index M = geom.size();
  if (zeta.size() != M * spec.N) throw std::invalid_argument("amplitude_beampattern_mimo: expected M*N samples");
  SignalSpec as_sources = spec;
  as_sources.J = M;
  const CVec v = steering_vector(geom, spec.fc + f, dir);
  return geom.element_pattern.amplitude(dir) * std::abs(v.dot(source_spectrum(zeta, f, as_sources)));
}

/// Frequency-integrated power beampattern of a narrowband architecture:
/// v^H diag(x) Ω ((1/N) Σ s_n s_n^H) Ω^H diag(x*) v with v and Ω at the carrier.
inline double integrated_power_beampattern(const RisSystem& sys, const CVec& s, const CVec& x, Direction dir) {
  const Index J = sys.signal.J;
  const Index N = sys.signal.N;
  if (s.size() != J * N) throw std::invalid_argument("integrated_power_beampattern: expected J*N samples");
  const CVec v = steering_vector(sys.ris, sys.signal.fc, dir);
  const CVec a = channel_matrix(sys, 0.0, dir).adjoint() * x.conjugate().cwiseProduct(v);
  double p = 0.0;
  for (Index n = 0; n < N; ++n) p += std::norm(a.dot(s.segment(n * J, J)));
  return p / static_cast<double>(N);
}

/// Normalized power beampattern B² / max B².
inline RMat npb_grid(const RMat& amplitude) {
  const double peak = amplitude.size() ? amplitude.cwiseAbs2().maxCoeff() : 0.0;
  if (!(peak > 0.0)) throw std::invalid_argument("npb_grid: beampattern is identically zero");
  return amplitude.cwiseAbs2() / peak;
}

/// Σ w (D - B)² for sampled desired and realized amplitudes.
inline double rse(const RMat& weights, const RMat& desired, const RMat& amplitude) {
  return (weights.array() * (desired - amplitude).array().square()).sum();
}

/// Grid-sampled quantities shared by every synthesizer. The channel matrix of
/// node (k, ℓ) factors as diag(Γ_ℓ) G_k, so the cache holds the gain-weighted
/// steering matrices Γ ⊙ v per frequency and G_k per frequency; Q_kℓ is never
/// formed.
struct SpectrumCache {
  Index M = 0, J = 0, N = 0, K = 0, L = 0;
  double scale = 1.0;            // 1/(W√T)
  std::vector<CMat> steer;       // K entries of M x L, column ℓ = Γ_ℓ ⊙ v_kℓ
  std::vector<CMat> channel;     // K entries of M x J; empty for a fully digital array
  std::vector<CMat> gram;        // K entries of M x M, Σ_ℓ w_kℓ (Γ⊙v)(Γ⊙v)^H
  CMat fourier;                  // K x N, e_kn = exp(-2πi n f_k / W), n = 1..N
  RMat desired;                  // K x L
  RMat weights;                  // K x L

  bool digital() const { return channel.empty(); }
  double desired_energy() const { return (weights.array() * desired.array().square()).sum(); }
};

namespace detail {

inline void fill_steering(SpectrumCache& c, const RisGeometry& geom, const SignalSpec& spec, const Grids& g) {
  const Index M = geom.size();
  RMat tau(M, g.L());
  RMat gain(M, g.L());
  for (Index l = 0; l < g.L(); ++l) {
    const Direction dir = g.angle(l);
    const double gl = geom.element_pattern.amplitude(dir);
    for (Index i = 0; i < M; ++i) {
      tau(i, l) = propagation_delay(geom.positions[i], dir);
      gain(i, l) = gl;
    }
  }
  c.steer.resize(static_cast<std::size_t>(g.K()));
  c.gram.resize(static_cast<std::size_t>(g.K()));
  for (Index k = 0; k < g.K(); ++k) {
    const double fa = spec.fc + g.freqs(k);
    CMat& P = c.steer[static_cast<std::size_t>(k)];
    P.resize(M, g.L());
    for (Index l = 0; l < g.L(); ++l)
      for (Index i = 0; i < M; ++i) P(i, l) = std::polar(gain(i, l), 2.0 * kPi * fa * tau(i, l));
    const CMat X = P * c.weights.row(k).cwiseSqrt().asDiagonal();
    CMat R = CMat::Zero(M, M);
    R.selfadjointView<Eigen::Lower>().rankUpdate(X);
    c.gram[static_cast<std::size_t>(k)] = R.selfadjointView<Eigen::Lower>();
  }
  c.fourier.resize(g.K(), spec.N);
  for (Index k = 0; k < g.K(); ++k)
    for (Index n = 0; n < spec.N; ++n)
      c.fourier(k, n) = std::polar(1.0, -2.0 * kPi * static_cast<double>(n + 1) * g.freqs(k) / spec.W);
}

inline void check_samples(const RMat& desired, const RMat& weights, const Grids& g) {
  if (desired.rows() != g.K() || desired.cols() != g.L() || weights.rows() != g.K() || weights.cols() != g.L())
    throw std::invalid_argument("SpectrumCache: desired/weight tables do not match the grid");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("SpectrumCache: negative weight");
}

}  // namespace detail

/// Cache for the RIS-based architecture.
inline SpectrumCache build_ris_cache(const RisSystem& sys, const Grids& g, const RMat& desired, const RMat& weights) {
  detail::check_samples(desired, weights, g);
  sys.ris.validate();
  if (sys.channel.elements() != sys.ris.size() || sys.channel.sources() != sys.signal.J)
    throw std::invalid_argument("build_ris_cache: channel dimensions do not match geometry/signal");
  SpectrumCache c;
  c.M = sys.ris.size();
  c.J = sys.signal.J;
  c.N = sys.signal.N;
  c.K = g.K();
  c.L = g.L();
  c.scale = sys.signal.scale();
  c.desired = desired;
  c.weights = weights;
  detail::fill_steering(c, sys.ris, sys.signal, g);
  c.channel.resize(static_cast<std::size_t>(g.K()));
  for (Index k = 0; k < g.K(); ++k) c.channel[static_cast<std::size_t>(k)] = sys.channel.matrix(g.freqs(k), sys.signal.fc);
  return c;
}

/// Cache for a fully digital array (MIMO or phased array) with the element
/// positions and pattern of `geom`; every element is its own source (J = M).
inline SpectrumCache build_array_cache(const RisGeometry& geom, const SignalSpec& spec, const Grids& g,
                                       const RMat& desired, const RMat& weights) {
  detail::check_samples(desired, weights, g);
  geom.validate();
  SpectrumCache c;
  c.M = geom.size();
  c.J = geom.size();
  c.N = spec.N;
  c.K = g.K();
  c.L = g.L();
  c.scale = spec.scale();
  c.desired = desired;
  c.weights = weights;
  detail::fill_steering(c, geom, spec, g);
  return c;
}

/// v^H diag(x) Q s on every grid node, K x L.
inline CMat grid_response(const SpectrumCache& c, const CVec& s, const CVec& x) {
  if (s.size() != c.J * c.N || x.size() != c.M) throw std::invalid_argument("grid_response: dimension mismatch");
  const Eigen::Map<const CMat> S(s.data(), c.J, c.N);
  const CMat sigma = S * c.fourier.transpose();  // J x K
  CMat out(c.K, c.L);
  for (Index k = 0; k < c.K; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    CVec y = c.digital() ? CVec(sigma.col(k)) : CVec(c.channel[ks] * sigma.col(k));
    y = (c.scale * x.cwiseProduct(y)).eval();
    out.row(k) = (c.steer[ks].adjoint() * y).transpose();
  }
  return out;
}

}  // namespace risbp

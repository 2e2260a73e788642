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

#include "risbp/ballqp.hpp"
#include "risbp/beampattern.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

namespace risbp {

struct RisDesign {
  CVec s;  // stacked s_1..s_N, J entries each
  CVec x;  // RIS phases
};

struct CmRisDesign {
  RVec u;      // per-source amplitudes
  CVec omega;  // unit-modulus sample phases, J*N
  CVec x;

  CVec s() const {
    const Index J = u.size();
    CVec out(omega.size());
    for (Index i = 0; i < omega.size(); ++i) out(i) = u(i % J) * omega(i);
    return out;
  }
};

struct MimoDesign {
  CVec zeta;  // stacked per-sample element signals, M*N
};

struct CmMimoDesign {
  RVec gamma;
  CVec xi;

  CVec zeta() const {
    const Index M = gamma.size();
    CVec out(xi.size());
    for (Index i = 0; i < xi.size(); ++i) out(i) = gamma(i % M) * xi(i);
    return out;
  }
};

struct PaDesign {
  CVec rho;  // sample sequence, N
  CVec chi;  // beamforming phases, M
};

struct CmPaDesign {
  CVec rho;
  CVec chi;
  double alpha = 0.0;
};

/// ζ = α (ϱ ⊗ χ), entry n*M + i = α ϱ_n χ_i.
inline CVec phased_array_signal(const CVec& rho, const CVec& chi, double alpha = 1.0) {
  CVec out(rho.size() * chi.size());
  for (Index n = 0; n < rho.size(); ++n) out.segment(n * chi.size(), chi.size()) = alpha * rho(n) * chi;
  return out;
}

enum class Termination { objective_converged, variables_converged, max_iterations };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::objective_converged:
      return "objective-converged";
    case Termination::variables_converged:
      return "variables-converged";
    default:
      return "max-iterations";
  }
}

struct SynthesisOptions {
  double tol = 1e-6;
  int max_iterations = 1000;
  std::uint64_t seed = 1;
};

struct BlockRecord {
  std::string block;
  double objective = 0.0;
};

struct SynthesisReport {
  std::string architecture;
  std::vector<double> trajectory;        // objective after each sweep; entry 0 is the initial point
  std::vector<BlockRecord> block_trace;  // objective after every block update
  double final_rse = 0.0;
  int iterations = 0;
  Termination termination = Termination::max_iterations;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// building blocks

/// ψ_kℓ = arg(inner_kℓ) with arg(0) = 0.
inline RMat psi_update(const CMat& inner) {
  RMat psi(inner.rows(), inner.cols());
  for (Index k = 0; k < inner.rows(); ++k)
    for (Index l = 0; l < inner.cols(); ++l) psi(k, l) = inner(k, l) == cplx{} ? 0.0 : std::arg(inner(k, l));
  return psi;
}

/// Σ w |D e^{iψ} - inner|².
inline double aux_objective(const SpectrumCache& c, const CMat& inner, const RMat& psi) {
  double total = 0.0;
  for (Index l = 0; l < c.L; ++l)
    for (Index k = 0; k < c.K; ++k)
      total += c.weights(k, l) * std::norm(std::polar(c.desired(k, l), psi(k, l)) - inner(k, l));
  return total;
}

/// h_k = Σ_ℓ w D e^{iψ} (Γ⊙v)_kℓ, one column per frequency (M x K).
inline CMat projected_target(const SpectrumCache& c, const RMat& psi) {
  CMat h(c.M, c.K);
  CVec t(c.L);
  for (Index k = 0; k < c.K; ++k) {
    for (Index l = 0; l < c.L; ++l) t(l) = std::polar(c.weights(k, l) * c.desired(k, l), psi(k, l));
    h.col(k).noalias() = c.steer[static_cast<std::size_t>(k)] * t;
  }
  return h;
}

/// Scaled element excitation before the RIS phases, y_k = G_k σ̂(f_k) (M x K).
inline CMat element_field(const SpectrumCache& c, const CVec& s) {
  if (s.size() != c.J * c.N) throw std::invalid_argument("element_field: expected J*N samples");
  const Eigen::Map<const CMat> S(s.data(), c.J, c.N);
  CMat sigma = c.scale * (S * c.fourier.transpose());
  if (c.digital()) return sigma;
  CMat y(c.M, c.K);
  for (Index k = 0; k < c.K; ++k) y.col(k).noalias() = c.channel[static_cast<std::size_t>(k)] * sigma.col(k);
  return y;
}

/// inner_kℓ = (Γ⊙v)_kℓ^H (x ⊙ y_k).
inline CMat inner_from_field(const SpectrumCache& c, const CMat& y, const CVec& x) {
  CMat out(c.K, c.L);
  for (Index k = 0; k < c.K; ++k) {
    const CVec e = x.cwiseProduct(y.col(k));
    out.row(k).noalias() = (c.steer[static_cast<std::size_t>(k)].adjoint() * e).transpose();
  }
  return out;
}

struct Quadratic {
  CMat A;
  CVec b;
};

namespace detail {

// Row n + N*n' of column k holds conj(e_kn) e_kn'.
inline CMat fourier_pairs(const SpectrumCache& c) {
  CMat e2(c.N * c.N, c.K);
  for (Index k = 0; k < c.K; ++k)
    for (Index n2 = 0; n2 < c.N; ++n2)
      for (Index n1 = 0; n1 < c.N; ++n1) e2(n1 + c.N * n2, k) = std::conj(c.fourier(k, n1)) * c.fourier(k, n2);
  return e2;
}

// Effective M x J map diag(x) G_k.
inline CMat effective_channel(const SpectrumCache& c, Index k, const CVec& x) {
  if (c.digital()) return CMat(x.asDiagonal());
  return x.asDiagonal() * c.channel[static_cast<std::size_t>(k)];
}

}  // namespace detail

/// A = Σ_k (conj(e_k) e_k^T) ⊗ Â_k with Â_k = (1/(W²T)) G_k^H diag(x*) R_k diag(x) G_k.
inline CMat assemble_A(const SpectrumCache& c, const CVec& x, const CMat& pairs) {
  const Index J = c.J;
  const double s2 = c.scale * c.scale;
  CMat hat(c.K, J * J);
  for (Index k = 0; k < c.K; ++k) {
    const CMat Z = detail::effective_channel(c, k, x);
    const CMat Ak = s2 * (Z.adjoint() * c.gram[static_cast<std::size_t>(k)] * Z);
    hat.row(k) = Eigen::Map<const Eigen::RowVectorXcd>(Ak.data(), J * J);
  }
  const CMat flat = pairs * hat;  // N² x J²
  CMat A(J * c.N, J * c.N);
  for (Index n2 = 0; n2 < c.N; ++n2)
    for (Index n1 = 0; n1 < c.N; ++n1)
      for (Index j2 = 0; j2 < J; ++j2)
        for (Index j1 = 0; j1 < J; ++j1) A(n1 * J + j1, n2 * J + j2) = flat(n1 + c.N * n2, j1 + J * j2);
  return A;
}

inline CMat assemble_A(const SpectrumCache& c, const CVec& x) { return assemble_A(c, x, detail::fourier_pairs(c)); }

/// b = Σ_k conj(e_k) ⊗ b̂_k with b̂_k = (1/(W√T)) G_k^H diag(x*) h_k.
inline CVec assemble_b(const SpectrumCache& c, const CVec& x, const CMat& h) {
  CMat hat(c.J, c.K);
  for (Index k = 0; k < c.K; ++k) hat.col(k) = c.scale * (detail::effective_channel(c, k, x).adjoint() * h.col(k));
  const CMat stacked = hat * c.fourier.conjugate();  // J x N
  return Eigen::Map<const CVec>(stacked.data(), c.J * c.N);
}

/// Waveform subproblem s^H A s - 2 Re(s^H b) for fixed RIS phases and ψ.
inline Quadratic assemble_A_b(const SpectrumCache& c, const CVec& x, const RMat& psi) {
  return {assemble_A(c, x), assemble_b(c, x, projected_target(c, psi))};
}

/// RIS-phase subproblem x^H B x - 2 Re(x^H c) for fixed waveforms and ψ.
inline Quadratic assemble_B_c(const SpectrumCache& c, const CMat& y, const CMat& h) {
  Quadratic q{CMat::Zero(c.M, c.M), CVec::Zero(c.M)};
  for (Index k = 0; k < c.K; ++k) {
    const CVec yk = y.col(k);
    q.A.noalias() += yk.conjugate().asDiagonal() * c.gram[static_cast<std::size_t>(k)] * yk.asDiagonal();
    q.b += yk.conjugate().cwiseProduct(h.col(k));
  }
  return q;
}

inline Quadratic assemble_B_c(const SpectrumCache& c, const CVec& s, const RMat& psi) {
  return assemble_B_c(c, element_field(c, s), projected_target(c, psi));
}

/// One ascending Gauss–Seidel pass of x_i = (c_i - Σ_{j≠i} B_ij x_j) / |·|.
inline CVec unit_modulus_sweep(const CMat& B, const CVec& c, CVec x) {
  if (B.rows() != x.size() || B.cols() != x.size() || c.size() != x.size())
    throw std::invalid_argument("unit_modulus_sweep: dimension mismatch");
  for (Index i = 0; i < x.size(); ++i) {
    const cplx num = c(i) - (B.row(i) * x).value() + B(i, i) * x(i);
    const double mag = std::abs(num);
    if (mag > 0.0) x(i) = num / mag;
  }
  return x;
}

struct IterateState {
  double objective = 0.0;
  std::vector<CVec> blocks;
};

struct ConvergenceVerdict {
  bool stop = false;
  Termination reason = Termination::max_iterations;
};

inline double relative_change(double before, double after) {
  if (before == after) return 0.0;
  const double ref = std::abs(before);
  return ref > 0.0 ? std::abs(after - before) / ref : std::numeric_limits<double>::infinity();
}

inline double relative_change(const CVec& before, const CVec& after) {
  const double diff = (after - before).norm();
  if (diff == 0.0) return 0.0;
  const double ref = before.norm();
  return ref > 0.0 ? diff / ref : std::numeric_limits<double>::infinity();
}

/// Stops on per-block relative variable change below tol, then on relative
/// objective change below tol, then on the iteration cap.
inline ConvergenceVerdict convergence_check(const IterateState& prev, const IterateState& cur, double tol,
                                            int iteration = 0, int max_iterations = 1000) {
  if (!(tol > 0.0)) throw std::invalid_argument("convergence_check: tol must be positive");
  if (prev.blocks.size() == cur.blocks.size() && !cur.blocks.empty()) {
    bool all = true;
    for (std::size_t b = 0; b < cur.blocks.size() && all; ++b)
      all = cur.blocks[b].size() == prev.blocks[b].size() && relative_change(prev.blocks[b], cur.blocks[b]) < tol;
    if (all) return {true, Termination::variables_converged};
  }
  if (cur.objective == 0.0 || relative_change(prev.objective, cur.objective) < tol)
    return {true, Termination::objective_converged};
  if (iteration >= max_iterations) return {true, Termination::max_iterations};
  return {false, Termination::max_iterations};
}

// ---------------------------------------------------------------------------
// grid evaluation of stored designs

inline CMat ris_inner(const SpectrumCache& c, const CVec& s, const CVec& x) {
  return inner_from_field(c, element_field(c, s), x);
}

inline CMat mimo_inner(const SpectrumCache& c, const CVec& zeta) {
  return inner_from_field(c, element_field(c, zeta), CVec::Ones(c.M));
}

/// Phased-array response sc ρ_k (Γ⊙v)^H χ with ρ = F ϱ, scaled by α.
inline CMat pa_inner(const SpectrumCache& c, const CVec& rho, const CVec& chi, double alpha = 1.0) {
  const CVec r = c.fourier * rho;
  CMat out(c.K, c.L);
  for (Index k = 0; k < c.K; ++k)
    out.row(k).noalias() = (alpha * c.scale * r(k)) * (c.steer[static_cast<std::size_t>(k)].adjoint() * chi).transpose();
  return out;
}

inline double rse_of_inner(const SpectrumCache& c, const CMat& inner) {
  return rse(c.weights, c.desired, inner.cwiseAbs());
}

// ---------------------------------------------------------------------------
// synthesizers

namespace detail {

using Clock = std::chrono::steady_clock;

inline CVec random_phases(Index n, double magnitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-kPi, kPi);
  CVec v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::polar(magnitude, dist(rng));
  return v;
}

inline void require_unit_modulus(const CVec& v, Index n, const char* what) {
  if (v.size() != n) throw std::invalid_argument(std::string(what) + ": wrong dimension");
  for (Index i = 0; i < v.size(); ++i)
    if (std::abs(std::abs(v(i)) - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + ": not unit modulus");
}

inline void require_power(double energy, double budget, const char* what) {
  if (energy > budget * (1.0 + 1e-9)) throw std::invalid_argument(std::string(what) + ": exceeds power budget");
}

inline void require_cache(const SpectrumCache& c, bool digital) {
  if (c.digital() != digital)
    throw std::invalid_argument(digital ? "synthesis: expected a fully digital array cache"
                                        : "synthesis: expected an RIS cache with a channel");
  if (c.M < 1 || c.J < 1 || c.N < 1 || c.K < 1 || c.L < 1) throw std::invalid_argument("synthesis: empty cache");
}

// Re(E^H A E) and Re(E^H b) for s = (1_N ⊗ u) ⊙ ω, u real.
inline std::pair<RMat, RVec> amplitude_problem(const CMat& A, const CVec& b, const CVec& omega, Index J) {
  const Index n = omega.size();
  const CMat C = omega.conjugate().asDiagonal() * A * omega.asDiagonal();
  RMat Ar = RMat::Zero(J, J);
  RVec br = RVec::Zero(J);
  for (Index q = 0; q < n; ++q) {
    br(q % J) += std::real(std::conj(omega(q)) * b(q));
    for (Index p = 0; p < n; ++p) Ar(p % J, q % J) += C(p, q).real();
  }
  return {0.5 * (Ar + Ar.transpose()), br};
}

// Folds negative amplitudes into the sample phases.
inline void fold_signs(RVec& u, CVec& omega) {
  const Index J = u.size();
  for (Index j = 0; j < J; ++j) {
    if (u(j) >= 0.0) continue;
    u(j) = -u(j);
    for (Index q = j; q < omega.size(); q += J) omega(q) = -omega(q);
  }
}

inline CVec as_complex(const RVec& v) { return v.cast<cplx>(); }

class Recorder {
 public:
  Recorder(SynthesisReport& r, const char* arch, std::uint64_t seed) : r_(r), start_(Clock::now()) {
    r_.architecture = arch;
    r_.seed = seed;
  }
  void block(const char* name, double obj) { r_.block_trace.push_back({name, obj}); }
  void sweep(double obj) { r_.trajectory.push_back(obj); }
  void finish(int iterations, Termination t, double final_rse) {
    r_.iterations = iterations;
    r_.termination = t;
    r_.final_rse = final_rse;
    r_.wall_time_s = std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  SynthesisReport& r_;
  Clock::time_point start_;
};

}  // namespace detail

/// Plain RIS: blocks ψ → s → x.
inline std::pair<RisDesign, SynthesisReport> synthesize_ris(const SpectrumCache& c, double P,
                                                            const SynthesisOptions& opt = {},
                                                            const std::optional<RisDesign>& start = {}) {
  detail::require_cache(c, false);
  const double budget = static_cast<double>(c.N) * P;
  SynthesisReport rep;
  detail::Recorder rec(rep, "ris", opt.seed);
  std::mt19937_64 rng(opt.seed);
  RisDesign d;
  if (start) {
    d = *start;
    if (d.s.size() != c.J * c.N) throw std::invalid_argument("synthesize_ris: start s has wrong dimension");
    detail::require_unit_modulus(d.x, c.M, "synthesize_ris: start x");
    detail::require_power(d.s.squaredNorm(), budget, "synthesize_ris: start s");
  } else {
    d.x = CVec::Ones(c.M);
    d.s = detail::random_phases(c.J * c.N, std::sqrt(P / static_cast<double>(c.J)), rng);
  }
  const CMat pairs = detail::fourier_pairs(c);

  CMat y = element_field(c, d.s);
  CMat inner = inner_from_field(c, y, d.x);
  RMat psi = psi_update(inner);
  double obj = aux_objective(c, inner, psi);
  rec.block("init", obj);
  rec.sweep(obj);
  IterateState prev{obj, {d.s, d.x}};
  for (int it = 1;; ++it) {
    const CMat h = projected_target(c, psi);
    d.s = BallQp<cplx>(assemble_A(c, d.x, pairs)).solve(assemble_b(c, d.x, h), budget).s;
    y = element_field(c, d.s);
    rec.block("s", aux_objective(c, inner_from_field(c, y, d.x), psi));

    const Quadratic bc = assemble_B_c(c, y, h);
    d.x = unit_modulus_sweep(bc.A, bc.b, d.x);
    inner = inner_from_field(c, y, d.x);
    rec.block("x", aux_objective(c, inner, psi));

    psi = psi_update(inner);
    obj = aux_objective(c, inner, psi);
    rec.block("psi", obj);
    rec.sweep(obj);

    IterateState cur{obj, {d.s, d.x}};
    const auto v = convergence_check(prev, cur, opt.tol, it, opt.max_iterations);
    prev = std::move(cur);
    if (v.stop) {
      rec.finish(it, v.reason, rse_of_inner(c, inner));
      break;
    }
  }
  return {d, rep};
}

/// Constant-modulus RIS: blocks ψ → u → ω → x.
inline std::pair<CmRisDesign, SynthesisReport> synthesize_ris_cm(const SpectrumCache& c, double P,
                                                                 const SynthesisOptions& opt = {},
                                                                 const std::optional<CmRisDesign>& start = {}) {
  detail::require_cache(c, false);
  SynthesisReport rep;
  detail::Recorder rec(rep, "ris-cm", opt.seed);
  std::mt19937_64 rng(opt.seed);
  CmRisDesign d;
  if (start) {
    d = *start;
    if (d.u.size() != c.J) throw std::invalid_argument("synthesize_ris_cm: start u has wrong dimension");
    if (!(d.u.minCoeff() > 0.0)) throw std::invalid_argument("synthesize_ris_cm: start u must be strictly positive");
    detail::require_power(d.u.squaredNorm(), P, "synthesize_ris_cm: start u");
    detail::require_unit_modulus(d.omega, c.J * c.N, "synthesize_ris_cm: start omega");
    detail::require_unit_modulus(d.x, c.M, "synthesize_ris_cm: start x");
  } else {
    d.x = CVec::Ones(c.M);
    d.u = RVec::Constant(c.J, std::sqrt(P / static_cast<double>(c.J)));
    d.omega = detail::random_phases(c.J * c.N, 1.0, rng);
  }
  const CMat pairs = detail::fourier_pairs(c);

  CMat inner = ris_inner(c, d.s(), d.x);
  RMat psi = psi_update(inner);
  double obj = aux_objective(c, inner, psi);
  rec.block("init", obj);
  rec.sweep(obj);
  IterateState prev{obj, {detail::as_complex(d.u), d.omega, d.x}};
  for (int it = 1;; ++it) {
    const CMat h = projected_target(c, psi);
    const CMat A = assemble_A(c, d.x, pairs);
    const CVec b = assemble_b(c, d.x, h);

    const auto [Ar, br] = detail::amplitude_problem(A, b, d.omega, c.J);
    d.u = BallQp<double>(Ar).solve(br, P).s;
    detail::fold_signs(d.u, d.omega);
    rec.block("u", aux_objective(c, ris_inner(c, d.s(), d.x), psi));

    const CVec ue = d.s().cwiseQuotient(d.omega);  // 1_N ⊗ u
    const CMat Bw = ue.conjugate().asDiagonal() * A * ue.asDiagonal();
    d.omega = unit_modulus_sweep(Bw, ue.conjugate().cwiseProduct(b), d.omega);
    const CMat y = element_field(c, d.s());
    rec.block("omega", aux_objective(c, inner_from_field(c, y, d.x), psi));

    const Quadratic bc = assemble_B_c(c, y, h);
    d.x = unit_modulus_sweep(bc.A, bc.b, d.x);
    inner = inner_from_field(c, y, d.x);
    rec.block("x", aux_objective(c, inner, psi));

    psi = psi_update(inner);
    obj = aux_objective(c, inner, psi);
    rec.block("psi", obj);
    rec.sweep(obj);

    IterateState cur{obj, {detail::as_complex(d.u), d.omega, d.x}};
    const auto v = convergence_check(prev, cur, opt.tol, it, opt.max_iterations);
    prev = std::move(cur);
    if (v.stop) {
      rec.finish(it, v.reason, rse_of_inner(c, inner));
      break;
    }
  }
  return {d, rep};
}

/// Fully digital array: blocks ψ → ζ. A does not depend on any block, so it is
/// factorized once.
inline std::pair<MimoDesign, SynthesisReport> synthesize_mimo(const SpectrumCache& c, double P,
                                                              const SynthesisOptions& opt = {},
                                                              const std::optional<MimoDesign>& start = {}) {
  detail::require_cache(c, true);
  const double budget = static_cast<double>(c.N) * P;
  SynthesisReport rep;
  detail::Recorder rec(rep, "mimo", opt.seed);
  std::mt19937_64 rng(opt.seed);
  MimoDesign d;
  if (start) {
    d = *start;
    if (d.zeta.size() != c.M * c.N) throw std::invalid_argument("synthesize_mimo: start zeta has wrong dimension");
    detail::require_power(d.zeta.squaredNorm(), budget, "synthesize_mimo: start zeta");
  } else {
    d.zeta = detail::random_phases(c.M * c.N, std::sqrt(P / static_cast<double>(c.M)), rng);
  }
  const CVec ones = CVec::Ones(c.M);
  const BallQp<cplx> qp(assemble_A(c, ones));

  CMat inner = mimo_inner(c, d.zeta);
  RMat psi = psi_update(inner);
  double obj = aux_objective(c, inner, psi);
  rec.block("init", obj);
  rec.sweep(obj);
  IterateState prev{obj, {d.zeta}};
  for (int it = 1;; ++it) {
    d.zeta = qp.solve(assemble_b(c, ones, projected_target(c, psi)), budget).s;
    inner = mimo_inner(c, d.zeta);
    rec.block("zeta", aux_objective(c, inner, psi));

    psi = psi_update(inner);
    obj = aux_objective(c, inner, psi);
    rec.block("psi", obj);
    rec.sweep(obj);

    IterateState cur{obj, {d.zeta}};
    const auto v = convergence_check(prev, cur, opt.tol, it, opt.max_iterations);
    prev = std::move(cur);
    if (v.stop) {
      rec.finish(it, v.reason, rse_of_inner(c, inner));
      break;
    }
  }
  return {d, rep};
}

/// Constant-modulus fully digital array: blocks ψ → γ → ξ.
inline std::pair<CmMimoDesign, SynthesisReport> synthesize_mimo_cm(const SpectrumCache& c, double P,
                                                                   const SynthesisOptions& opt = {},
                                                                   const std::optional<CmMimoDesign>& start = {}) {
  detail::require_cache(c, true);
  SynthesisReport rep;
  detail::Recorder rec(rep, "mimo-cm", opt.seed);
  std::mt19937_64 rng(opt.seed);
  CmMimoDesign d;
  if (start) {
    d = *start;
    if (d.gamma.size() != c.M) throw std::invalid_argument("synthesize_mimo_cm: start gamma has wrong dimension");
    if (!(d.gamma.minCoeff() > 0.0))
      throw std::invalid_argument("synthesize_mimo_cm: start gamma must be strictly positive");
    detail::require_power(d.gamma.squaredNorm(), P, "synthesize_mimo_cm: start gamma");
    detail::require_unit_modulus(d.xi, c.M * c.N, "synthesize_mimo_cm: start xi");
  } else {
    d.gamma = RVec::Constant(c.M, std::sqrt(P / static_cast<double>(c.M)));
    d.xi = detail::random_phases(c.M * c.N, 1.0, rng);
  }
  const CVec ones = CVec::Ones(c.M);
  const CMat A = assemble_A(c, ones);

  CMat inner = mimo_inner(c, d.zeta());
  RMat psi = psi_update(inner);
  double obj = aux_objective(c, inner, psi);
  rec.block("init", obj);
  rec.sweep(obj);
  IterateState prev{obj, {detail::as_complex(d.gamma), d.xi}};
  for (int it = 1;; ++it) {
    const CVec b = assemble_b(c, ones, projected_target(c, psi));

    const auto [Ar, br] = detail::amplitude_problem(A, b, d.xi, c.M);
    d.gamma = BallQp<double>(Ar).solve(br, P).s;
    detail::fold_signs(d.gamma, d.xi);
    rec.block("gamma", aux_objective(c, mimo_inner(c, d.zeta()), psi));

    const CVec ge = d.zeta().cwiseQuotient(d.xi);
    const CMat Bw = ge.conjugate().asDiagonal() * A * ge.asDiagonal();
    d.xi = unit_modulus_sweep(Bw, ge.conjugate().cwiseProduct(b), d.xi);
    inner = mimo_inner(c, d.zeta());
    rec.block("xi", aux_objective(c, inner, psi));

    psi = psi_update(inner);
    obj = aux_objective(c, inner, psi);
    rec.block("psi", obj);
    rec.sweep(obj);

    IterateState cur{obj, {detail::as_complex(d.gamma), d.xi}};
    const auto v = convergence_check(prev, cur, opt.tol, it, opt.max_iterations);
    prev = std::move(cur);
    if (v.stop) {
      rec.finish(it, v.reason, rse_of_inner(c, inner));
      break;
    }
  }
  return {d, rep};
}

namespace detail {

// Per-frequency coefficients of the sample-sequence subproblem for fixed χ:
// α_k = Σ_ℓ w |a_kℓ|², β_k = Σ_ℓ w D e^{iψ} conj(a_kℓ), a_kℓ = sc (Γ⊙v)^H χ.
inline std::pair<RVec, CVec> sequence_coefficients(const SpectrumCache& c, const CVec& chi, const RMat& psi) {
  RVec alpha(c.K);
  CVec beta(c.K);
  for (Index k = 0; k < c.K; ++k) {
    const CVec a = c.scale * (c.steer[static_cast<std::size_t>(k)].adjoint() * chi);
    double s = 0.0;
    cplx t{};
    for (Index l = 0; l < c.L; ++l) {
      s += c.weights(k, l) * std::norm(a(l));
      t += std::polar(c.weights(k, l) * c.desired(k, l), psi(k, l)) * std::conj(a(l));
    }
    alpha(k) = s;
    beta(k) = t;
  }
  return {alpha, beta};
}

// B = Σ_k sc² |ρ_k|² R_k and c = Σ_k sc conj(ρ_k) h_k for the beamforming block.
inline Quadratic beamformer_problem(const SpectrumCache& c, const CVec& rho, const CMat& h) {
  const CVec r = c.fourier * rho;
  Quadratic q{CMat::Zero(c.M, c.M), CVec::Zero(c.M)};
  for (Index k = 0; k < c.K; ++k) {
    q.A += (c.scale * c.scale * std::norm(r(k))) * c.gram[static_cast<std::size_t>(k)];
    q.b += (c.scale * std::conj(r(k))) * h.col(k);
  }
  return q;
}

}  // namespace detail

/// Phased array ζ = ϱ ⊗ χ: blocks ψ → ϱ → χ.
inline std::pair<PaDesign, SynthesisReport> synthesize_pa(const SpectrumCache& c, double P,
                                                          const SynthesisOptions& opt = {},
                                                          const std::optional<PaDesign>& start = {}) {
  detail::require_cache(c, true);
  const double budget = static_cast<double>(c.N) * P / static_cast<double>(c.M);
  SynthesisReport rep;
  detail::Recorder rec(rep, "pa", opt.seed);
  std::mt19937_64 rng(opt.seed);
  PaDesign d;
  if (start) {
    d = *start;
    if (d.rho.size() != c.N) throw std::invalid_argument("synthesize_pa: start rho has wrong dimension");
    detail::require_power(d.rho.squaredNorm(), budget, "synthesize_pa: start rho");
    detail::require_unit_modulus(d.chi, c.M, "synthesize_pa: start chi");
  } else {
    d.rho = detail::random_phases(c.N, std::sqrt(P / static_cast<double>(c.M)), rng);
    d.chi = CVec::Ones(c.M);
  }

  CMat inner = pa_inner(c, d.rho, d.chi);
  RMat psi = psi_update(inner);
  double obj = aux_objective(c, inner, psi);
  rec.block("init", obj);
  rec.sweep(obj);
  IterateState prev{obj, {d.rho, d.chi}};
  for (int it = 1;; ++it) {
    const auto [al, be] = detail::sequence_coefficients(c, d.chi, psi);
    const CMat Ar = c.fourier.adjoint() * al.asDiagonal() * c.fourier;
    d.rho = BallQp<cplx>(Ar).solve(c.fourier.adjoint() * be, budget).s;
    rec.block("rho", aux_objective(c, pa_inner(c, d.rho, d.chi), psi));

    const Quadratic bc = detail::beamformer_problem(c, d.rho, projected_target(c, psi));
    d.chi = unit_modulus_sweep(bc.A, bc.b, d.chi);
    inner = pa_inner(c, d.rho, d.chi);
    rec.block("chi", aux_objective(c, inner, psi));

    psi = psi_update(inner);
    obj = aux_objective(c, inner, psi);
    rec.block("psi", obj);
    rec.sweep(obj);

    IterateState cur{obj, {d.rho, d.chi}};
    const auto v = convergence_check(prev, cur, opt.tol, it, opt.max_iterations);
    prev = std::move(cur);
    if (v.stop) {
      rec.finish(it, v.reason, rse_of_inner(c, inner));
      break;
    }
  }
  return {d, rep};
}

/// Constant-modulus phased array ζ = α (ϱ ⊗ χ): blocks ψ → ϱ → χ → α.
inline std::pair<CmPaDesign, SynthesisReport> synthesize_pa_cm(const SpectrumCache& c, double P,
                                                               const SynthesisOptions& opt = {},
                                                               const std::optional<CmPaDesign>& start = {}) {
  detail::require_cache(c, true);
  const double alpha_max = std::sqrt(P / static_cast<double>(c.M));
  SynthesisReport rep;
  detail::Recorder rec(rep, "pa-cm", opt.seed);
  std::mt19937_64 rng(opt.seed);
  CmPaDesign d;
  if (start) {
    d = *start;
    detail::require_unit_modulus(d.rho, c.N, "synthesize_pa_cm: start rho");
    detail::require_unit_modulus(d.chi, c.M, "synthesize_pa_cm: start chi");
    if (!(d.alpha >= 0.0) || d.alpha > alpha_max * (1.0 + 1e-9))
      throw std::invalid_argument("synthesize_pa_cm: start alpha outside [0, sqrt(P/M)]");
  } else {
    d.rho = detail::random_phases(c.N, 1.0, rng);
    d.chi = CVec::Ones(c.M);
    d.alpha = alpha_max;
  }

  CMat inner = pa_inner(c, d.rho, d.chi, d.alpha);
  RMat psi = psi_update(inner);
  double obj = aux_objective(c, inner, psi);
  rec.block("init", obj);
  rec.sweep(obj);
  auto state = [&](double o) { return IterateState{o, {d.rho, d.chi, CVec::Constant(1, d.alpha)}}; };
  IterateState prev = state(obj);
  for (int it = 1;; ++it) {
    const auto [al, be] = detail::sequence_coefficients(c, d.chi, psi);
    const CMat Ar = (d.alpha * d.alpha) * (c.fourier.adjoint() * al.asDiagonal() * c.fourier);
    d.rho = unit_modulus_sweep(Ar, d.alpha * (c.fourier.adjoint() * be), d.rho);
    rec.block("rho", aux_objective(c, pa_inner(c, d.rho, d.chi, d.alpha), psi));

    Quadratic bc = detail::beamformer_problem(c, d.rho, projected_target(c, psi));
    d.chi = unit_modulus_sweep((d.alpha * d.alpha) * bc.A, d.alpha * bc.b, d.chi);
    const CMat g = pa_inner(c, d.rho, d.chi);
    rec.block("chi", aux_objective(c, d.alpha * g, psi));

    double num = 0.0, den = 0.0;
    for (Index l = 0; l < c.L; ++l) {
      for (Index k = 0; k < c.K; ++k) {
        num += c.weights(k, l) * c.desired(k, l) * std::real(std::polar(1.0, -psi(k, l)) * g(k, l));
        den += c.weights(k, l) * std::norm(g(k, l));
      }
    }
    if (den > 0.0) d.alpha = std::clamp(num / den, 0.0, alpha_max);
    inner = d.alpha * g;
    rec.block("alpha", aux_objective(c, inner, psi));

    psi = psi_update(inner);
    obj = aux_objective(c, inner, psi);
    rec.block("psi", obj);
    rec.sweep(obj);

    IterateState cur = state(obj);
    const auto v = convergence_check(prev, cur, opt.tol, it, opt.max_iterations);
    prev = std::move(cur);
    if (v.stop) {
      rec.finish(it, v.reason, rse_of_inner(c, inner));
      break;
    }
  }
  return {d, rep};
}

}  // namespace risbp

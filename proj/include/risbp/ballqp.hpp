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

// Minimization of a convex Hermitian quadratic s^H A s - 2 Re(s^H b) over the
// ball ||s||^2 <= radius_sq, by eigendecomposition of A and a bisection on the
// secular equation for the Lagrange multiplier.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace risbp {

/// Raised when the secular equation cannot be bracketed numerically.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which branch of the KKT analysis produced the solution.
///   1: A positive definite, unconstrained minimizer inside the ball
///   2: A positive definite, constraint active
///   3: A singular with b having a component in its null space (active)
///   4: A singular, b orthogonal to the null space, minimum-norm solution inside
///   5: A singular, b orthogonal to the null space, constraint active
enum class BallQpCase : int { interior = 1, boundary = 2, null_space_boundary = 3, singular_interior = 4, singular_boundary = 5 };

template <typename Scalar>
struct BallQpProblem {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix A;
  Vector b;
  double radius_sq = 1.0;
};

template <typename Scalar>
struct BallQpSolution {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> s;
  double lambda = 0.0;
  BallQpCase case_id = BallQpCase::interior;
  double secular_residual = 0.0;  // |f(λ) - radius_sq|, zero in interior cases
  double lambda_lower = 0.0;
  double lambda_upper = 0.0;
};

struct SecularBracket {
  double lower = 0.0;
  double upper = 0.0;
};

/// Bracket for the root of f(λ) = Σ |b̃_i|² / (σ_i + λ)² = radius_sq built from
/// the smallest eigenvalue and the modes that attain it.
inline SecularBracket secular_bracket(const std::vector<double>& sigmas, const std::vector<double>& btilde_abs,
                                      double radius_sq) {
  double sigma_min = std::numeric_limits<double>::infinity();
  for (double s : sigmas) sigma_min = std::min(sigma_min, s);
  double norm_sq = 0.0;
  double min_mode_sq = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double m = btilde_abs[i] * btilde_abs[i];
    norm_sq += m;
    if (sigmas[i] == sigma_min) min_mode_sq += m;
  }
  const double rho = std::sqrt(radius_sq);
  return {std::max(0.0, std::sqrt(min_mode_sq) / rho - sigma_min), std::sqrt(norm_sq) / rho - sigma_min};
}

inline double secular_function(const std::vector<double>& sigmas, const std::vector<double>& btilde_abs,
                               double lambda) {
  double f = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (btilde_abs[i] == 0.0) continue;
    const double d = sigmas[i] + lambda;
    if (d <= 0.0) return std::numeric_limits<double>::infinity();
    f += (btilde_abs[i] / d) * (btilde_abs[i] / d);
  }
  return f;
}

/// Root of the secular equation by bisection inside the analytic bracket.
inline double secular_root(const std::vector<double>& sigmas, const std::vector<double>& btilde_abs,
                           double radius_sq) {
  if (sigmas.size() != btilde_abs.size()) throw std::invalid_argument("secular_root: size mismatch");
  if (!(radius_sq > 0.0)) throw std::invalid_argument("secular_root: radius must be positive");
  const SecularBracket br = secular_bracket(sigmas, btilde_abs, radius_sq);
  double lo = br.lower;
  double hi = br.upper;
  const double slack = 1e-9 * radius_sq;
  const double f_lo = secular_function(sigmas, btilde_abs, lo);
  const double f_hi = secular_function(sigmas, btilde_abs, hi);
  if (hi < lo * (1.0 - 1e-12) - 1e-300 || f_lo < radius_sq - slack || f_hi > radius_sq + slack) {
    throw SolverError("secular_root: bracket failure (lower=" + std::to_string(lo) + ", upper=" + std::to_string(hi) +
                      ", f(lower)=" + std::to_string(f_lo) + ", f(upper)=" + std::to_string(f_hi) +
                      ", radius_sq=" + std::to_string(radius_sq) + ")");
  }
  if (hi < lo) hi = lo;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double fm = secular_function(sigmas, btilde_abs, mid);
    if (std::abs(fm - radius_sq) <= 1e-12 * radius_sq) break;
    if (fm > radius_sq)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      mid = 0.5 * (lo + hi);
      break;
    }
  }
  return mid;
}

/// Ball-constrained quadratic minimizer with a reusable eigendecomposition of A.
template <typename Scalar>
class BallQp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BallQp(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("BallQp: A must be square");
    const double scale = A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
    const double asym = A.size() == 0 ? 0.0 : (A - A.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, scale)) throw std::invalid_argument("BallQp: A is not Hermitian");
    const Matrix sym = 0.5 * (A + A.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) throw SolverError("BallQp: eigendecomposition failed");
    U_ = eig.eigenvectors();
    sigma_ = eig.eigenvalues();
    const double top = sigma_.size() ? sigma_.maxCoeff() : 0.0;
    if (sigma_.size() && sigma_.minCoeff() < -1e-10 * std::max(1.0, top))
      throw std::invalid_argument("BallQp: A is not positive semidefinite");
    // roundoff-level eigenvalues of a Gram matrix are treated as exact zeros
    const double zero_tol = 1e-13 * top;
    for (Eigen::Index i = 0; i < sigma_.size(); ++i)
      if (sigma_(i) <= zero_tol) sigma_(i) = 0.0;
  }

  const Eigen::VectorXd& eigenvalues() const { return sigma_; }
  const Matrix& eigenvectors() const { return U_; }

  BallQpSolution<Scalar> solve(const Vector& b, double radius_sq) const {
    using Eigen::Index;
    if (b.size() != U_.rows()) throw std::invalid_argument("BallQp: dimension mismatch");
    if (!(radius_sq > 0.0)) throw std::invalid_argument("BallQp: radius must be positive");
    const Index n = b.size();
    const Vector bt = U_.adjoint() * b;
    const double bnorm = bt.norm();

    bool singular = false;
    bool null_component = false;
    double interior_norm_sq = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double m = std::abs(bt(i));
      if (sigma_(i) == 0.0) {
        singular = true;
        if (m > 1e-12 * bnorm) null_component = true;
      } else {
        interior_norm_sq += (m / sigma_(i)) * (m / sigma_(i));
      }
    }

    BallQpSolution<Scalar> out;
    Vector st = Vector::Zero(n);
    const bool boundary = null_component || interior_norm_sq > radius_sq * (1.0 - 1e-12);
    if (!boundary) {
      for (Index i = 0; i < n; ++i)
        if (sigma_(i) != 0.0) st(i) = bt(i) / sigma_(i);
      out.case_id = singular ? BallQpCase::singular_interior : BallQpCase::interior;
    } else {
      std::vector<double> sig(static_cast<std::size_t>(n)), mag(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        sig[static_cast<std::size_t>(i)] = sigma_(i);
        mag[static_cast<std::size_t>(i)] = std::abs(bt(i));
      }
      const SecularBracket br = secular_bracket(sig, mag, radius_sq);
      out.lambda_lower = br.lower;
      out.lambda_upper = br.upper;
      out.lambda = secular_root(sig, mag, radius_sq);
      out.secular_residual = std::abs(secular_function(sig, mag, out.lambda) - radius_sq);
      for (Index i = 0; i < n; ++i) st(i) = bt(i) / (sigma_(i) + out.lambda);
      out.case_id = null_component ? BallQpCase::null_space_boundary
                                   : (singular ? BallQpCase::singular_boundary : BallQpCase::boundary);
    }
    out.s = U_ * st;
    return out;
  }

 private:
  Matrix U_;
  Eigen::VectorXd sigma_;
};

template <typename Scalar>
BallQpSolution<Scalar> solve_ball_qp(const BallQpProblem<Scalar>& p) {
  return BallQp<Scalar>(p.A).solve(p.b, p.radius_sq);
}

template <typename Derived, typename DerivedB, typename DerivedS>
double ball_qp_objective(const Eigen::MatrixBase<Derived>& A, const Eigen::MatrixBase<DerivedB>& b,
                         const Eigen::MatrixBase<DerivedS>& s) {
  return std::real(s.dot(A * s)) - 2.0 * std::real(s.dot(b));
}

}  // namespace risbp

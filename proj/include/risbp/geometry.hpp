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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace risbp {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, exact
inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Elevation/azimuth pair in radians. Elevation is measured from the x–y plane,
/// azimuth from +x towards +y; the unit vector is
/// (cos θ cos φ, cos θ sin φ, sin θ).
struct Direction {
  double theta = 0.0;
  double phi = 0.0;
};

inline Vec3 unit_vector(Direction d) {
  return {std::cos(d.theta) * std::cos(d.phi), std::cos(d.theta) * std::sin(d.phi),
          std::sin(d.theta)};
}

/// Cosine-power element pattern with power gain 2(β+1) cos^β θ cos^β φ.
/// β = 1 gives the RIS element amplitude √(4 cos θ cos φ). Directions with a
/// negative cosine lie behind the element and get zero gain.
struct CosinePattern {
  double exponent = 1.0;

  double power_gain(Direction d) const {
    const double ct = std::cos(d.theta);
    const double cp = std::cos(d.phi);
    if (ct <= 0.0 || cp <= 0.0) return 0.0;
    return 2.0 * (exponent + 1.0) * std::pow(ct * cp, exponent);
  }
  double amplitude(Direction d) const { return std::sqrt(power_gain(d)); }
  bool behind(Direction d) const { return std::cos(d.theta) < 0.0 || std::cos(d.phi) < 0.0; }
};

/// RIS element amplitude pattern √(4 cos θ cos φ).
inline double element_gain_ris(Direction d) { return CosinePattern{1.0}.amplitude(d); }

struct RisGeometry {
  std::vector<Vec3> positions;
  CosinePattern element_pattern{1.0};
  // Boresight of the element's feed side (towards the sources). The default
  // corresponds to a transmitting surface fed from behind (x < 0).
  Vec3 feed_boresight{-1.0, 0.0, 0.0};

  Index size() const { return static_cast<Index>(positions.size()); }

  // Positions are relative to the surface's center of gravity.
  void validate() const {
    if (positions.empty()) throw std::invalid_argument("RisGeometry: no elements");
    Vec3 sum = Vec3::Zero();
    double scale = 0.0;
    for (const auto& p : positions) {
      sum += p;
      scale = std::max(scale, p.norm());
    }
    if (sum.norm() / static_cast<double>(positions.size()) > 1e-9 * std::max(1.0, scale))
      throw std::invalid_argument("RisGeometry: element centroid is not at the origin");
    if (std::abs(feed_boresight.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("RisGeometry: feed boresight must have unit norm");
  }
};

struct SourceGeometry {
  std::vector<Vec3> positions;
  std::vector<Vec3> boresights;
  CosinePattern pattern{13.0};
  std::vector<double> offsets;  // transmission offsets Δ_j, seconds

  Index size() const { return static_cast<Index>(positions.size()); }

  void validate() const {
    if (positions.empty()) throw std::invalid_argument("SourceGeometry: no sources");
    if (boresights.size() != positions.size() || offsets.size() != positions.size())
      throw std::invalid_argument("SourceGeometry: positions/boresights/offsets size mismatch");
    if (pattern.exponent < 0.0) throw std::invalid_argument("SourceGeometry: negative beta");
    for (const auto& b : boresights)
      if (std::abs(b.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("SourceGeometry: boresight must have unit norm");
    for (double o : offsets)
      if (!(o >= 0.0)) throw std::invalid_argument("SourceGeometry: negative offset");
  }
};

struct SignalSpec {
  Index J = 1;        // sources
  Index N = 1;        // samples per waveform
  double W = 1.0;     // bandwidth, Hz
  double T = 1.0;     // duration, s
  double fc = 1.0;    // carrier, Hz
  double P = 1.0;     // power budget, W

  static SignalSpec make(Index J, double W, double T, double fc, double P) {
    if (J < 1) throw std::invalid_argument("SignalSpec: J must be >= 1");
    if (!(W > 0.0) || !(T > 0.0)) throw std::invalid_argument("SignalSpec: W and T must be positive");
    if (!(fc > W / 2)) throw std::invalid_argument("SignalSpec: carrier must exceed W/2");
    if (!(P > 0.0)) throw std::invalid_argument("SignalSpec: power budget must be positive");
    // W*T is often an integer up to roundoff (1e8 * 0.64e-6).
    const auto n = static_cast<Index>(std::floor(W * T * (1.0 + 1e-12)));
    if (n < 1) throw std::invalid_argument("SignalSpec: floor(W*T) must be >= 1");
    return SignalSpec{J, n, W, T, fc, P};
  }
  double scale() const { return 1.0 / (W * std::sqrt(T)); }
};

/// rows x cols grid in the y–z plane, row index along z and column index along
/// y; element i = r*cols + c. Broadside is +x.
inline RisGeometry build_planar_ris(int rows, int cols, double spacing) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("build_planar_ris: rows and cols must be >= 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("build_planar_ris: spacing must be positive");
  RisGeometry g;
  g.positions.reserve(static_cast<std::size_t>(rows) * cols);
  const double r0 = 0.5 * (rows - 1);
  const double c0 = 0.5 * (cols - 1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g.positions.emplace_back(0.0, (c - c0) * spacing, (r - r0) * spacing);
  return g;
}

/// Half-wavelength spacing at the highest frequency of the band.
inline double half_wavelength_spacing(double fc, double W) { return kSpeedOfLight / (2.0 * (fc + W / 2)); }

inline double propagation_delay(const Vec3& p, Direction dir) {
  return -p.dot(unit_vector(dir)) / kSpeedOfLight;
}

inline CVec steering_vector(const RisGeometry& geom, double absolute_freq, Direction dir) {
  const Vec3 u = unit_vector(dir);
  CVec v(geom.size());
  for (Index i = 0; i < geom.size(); ++i) {
    const double tau = -geom.positions[i].dot(u) / kSpeedOfLight;
    v(i) = std::polar(1.0, 2.0 * kPi * absolute_freq * tau);
  }
  return v;
}

/// Orthonormal local frame whose x-axis is the boresight. Local z is global z
/// projected orthogonally to the boresight (global y when the boresight is ±z);
/// local y completes the right-handed triad.
inline Eigen::Matrix3d local_frame(const Vec3& boresight) {
  const Vec3 x = boresight.normalized();
  Vec3 ref = Vec3::UnitZ();
  Vec3 z = ref - ref.dot(x) * x;
  if (z.norm() < 1e-9) {
    ref = Vec3::UnitY();
    z = ref - ref.dot(x) * x;
  }
  z.normalize();
  const Vec3 y = z.cross(x);
  Eigen::Matrix3d frame;
  frame.row(0) = x.transpose();
  frame.row(1) = y.transpose();
  frame.row(2) = z.transpose();
  return frame;
}

/// Elevation/azimuth of target as seen from the observer's local frame.
/// Azimuth is in (-π, π]; |φ| > π/2 means the target is behind the observer.
inline Direction local_angles(const Vec3& observer_position, const Vec3& observer_boresight,
                              const Vec3& target_position) {
  const Vec3 d = target_position - observer_position;
  const double r = d.norm();
  if (!(r > 0.0)) throw std::invalid_argument("local_angles: coincident observer and target");
  const Vec3 local = local_frame(observer_boresight) * (d / r);
  return {std::asin(std::clamp(local.z(), -1.0, 1.0)), std::atan2(local.y(), local.x())};
}

namespace detail {

struct Ball {
  Vec3 center = Vec3::Zero();
  double radius_sq = -1.0;
  bool contains(const Vec3& p) const {
    return (p - center).squaredNorm() <= radius_sq * (1.0 + 1e-12) + 1e-24;
  }
};

inline Ball ball_from(const std::vector<Vec3>& s) {
  Ball b;
  switch (s.size()) {
    case 0:
      return b;
    case 1:
      b.center = s[0];
      b.radius_sq = 0.0;
      return b;
    case 2:
      b.center = 0.5 * (s[0] + s[1]);
      b.radius_sq = (s[0] - b.center).squaredNorm();
      return b;
    case 3: {
      const Vec3 u = s[1] - s[0];
      const Vec3 v = s[2] - s[0];
      const Vec3 w = u.cross(v);
      const double w2 = w.squaredNorm();
      if (w2 <= 1e-30 * std::max(1.0, u.squaredNorm() * v.squaredNorm())) {
        // collinear: the farthest pair spans the ball
        Ball best = ball_from({s[0], s[1]});
        for (const auto& pr : {std::pair{0, 2}, std::pair{1, 2}}) {
          Ball c = ball_from({s[pr.first], s[pr.second]});
          if (c.radius_sq > best.radius_sq) best = c;
        }
        return best;
      }
      const Vec3 offset = (u.squaredNorm() * v - v.squaredNorm() * u).cross(w) / (2.0 * w2);
      b.center = s[0] + offset;
      b.radius_sq = offset.squaredNorm();
      return b;
    }
    default: {
      Eigen::Matrix3d a;
      Vec3 rhs;
      for (int r = 0; r < 3; ++r) {
        a.row(r) = 2.0 * (s[r + 1] - s[0]).transpose();
        rhs(r) = s[r + 1].squaredNorm() - s[0].squaredNorm();
      }
      const auto lu = a.fullPivLu();
      if (!lu.isInvertible()) {
        // coplanar support: pick the smallest triple circle covering all four
        Ball best;
        for (int skip = 0; skip < 4; ++skip) {
          std::vector<Vec3> t;
          for (int k = 0; k < 4; ++k)
            if (k != skip) t.push_back(s[k]);
          Ball c = ball_from(t);
          if (c.contains(s[skip]) && (best.radius_sq < 0 || c.radius_sq < best.radius_sq)) best = c;
        }
        return best;
      }
      b.center = lu.solve(rhs);
      b.radius_sq = (s[0] - b.center).squaredNorm();
      return b;
    }
  }
}

inline Ball welzl(std::vector<Vec3>& pts, std::size_t n, std::vector<Vec3>& boundary) {
  Ball b = ball_from(boundary);
  if (boundary.size() == 4) return b;
  for (std::size_t i = 0; i < n; ++i) {
    if (b.radius_sq >= 0.0 && b.contains(pts[i])) continue;
    boundary.push_back(pts[i]);
    b = welzl(pts, i, boundary);
    boundary.pop_back();
    // move-to-front keeps the recursion shallow on structured inputs
    std::rotate(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(i),
                pts.begin() + static_cast<std::ptrdiff_t>(i) + 1);
  }
  return b;
}

}  // namespace detail

/// Diameter of the smallest ball enclosing the points (Welzl, move-to-front).
inline double enclosing_ball_diameter(std::vector<Vec3> points) {
  if (points.empty()) return 0.0;
  std::vector<Vec3> boundary;
  const auto b = detail::welzl(points, points.size(), boundary);
  return 2.0 * std::sqrt(std::max(0.0, b.radius_sq));
}

}  // namespace risbp

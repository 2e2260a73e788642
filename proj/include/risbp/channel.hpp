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

#include "risbp/geometry.hpp"

#include <limits>
#include <variant>

namespace risbp {

struct Tap {
  cplx gain{1.0, 0.0};
  double delay = 0.0;  // seconds
};

/// Tap-delay source→element channels, one tap list per (element i, source j).
class TapChannel {
 public:
  TapChannel() = default;
  TapChannel(Index M, Index J) : M_(M), J_(J), taps_(static_cast<std::size_t>(M * J)) {}

  Index elements() const { return M_; }
  Index sources() const { return J_; }

  std::vector<Tap>& at(Index i, Index j) { return taps_[flat(i, j)]; }
  const std::vector<Tap>& at(Index i, Index j) const { return taps_[flat(i, j)]; }

  void validate() const {
    for (const auto& list : taps_) {
      if (list.empty()) throw std::invalid_argument("TapChannel: every (i, j) pair needs at least one tap");
      for (const auto& t : list)
        if (!(t.delay >= 0.0)) throw std::invalid_argument("TapChannel: negative tap delay");
    }
  }

 private:
  std::size_t flat(Index i, Index j) const {
    if (i < 0 || i >= M_ || j < 0 || j >= J_) throw std::invalid_argument("TapChannel: index out of range");
    return static_cast<std::size_t>(i * J_ + j);
  }

  Index M_ = 0;
  Index J_ = 0;
  std::vector<std::vector<Tap>> taps_;
};

inline cplx evaluate_tap_channel(const TapChannel& taps, Index i, Index j, double f) {
  cplx g{0.0, 0.0};
  for (const auto& t : taps.at(i, j)) g += t.gain * std::polar(1.0, -2.0 * kPi * f * t.delay);
  return g;
}

/// Line-of-sight spherical-wave channel between cosine-pattern sources and
/// RIS elements. Geometry-dependent factors are resolved once at construction.
class LosChannelModel {
 public:
  LosChannelModel() = default;
  LosChannelModel(const RisGeometry& ris, const SourceGeometry& src) : M_(ris.size()), J_(src.size()) {
    ris.validate();
    src.validate();
    distance_.resize(M_, J_);
    amplitude_.resize(M_, J_);
    for (Index i = 0; i < M_; ++i) {
      for (Index j = 0; j < J_; ++j) {
        const Vec3& p = ris.positions[i];
        const Vec3& q = src.positions[j];
        const double d = (p - q).norm();
        if (!(d > 0.0)) throw std::invalid_argument("LosChannelModel: source coincides with an element");
        const Direction from_source = local_angles(q, src.boresights[j], p);
        const Direction from_element = local_angles(p, ris.feed_boresight, q);
        if (src.pattern.behind(from_source) || ris.element_pattern.behind(from_element)) ++clamped_;
        const double gain = src.pattern.power_gain(from_source) * ris.element_pattern.power_gain(from_element);
        distance_(i, j) = d;
        // |G| = sqrt(gain) * (c/f) / sqrt(4π) / sqrt(4π d²); the (c/f) factor is applied per frequency
        amplitude_(i, j) = std::sqrt(gain) / std::sqrt(4.0 * kPi) / std::sqrt(4.0 * kPi * d * d);
      }
    }
  }

  Index elements() const { return M_; }
  Index sources() const { return J_; }
  double distance(Index i, Index j) const { return distance_(i, j); }
  /// Number of (element, source) pairs where one side sits behind the other's pattern.
  Index clamped_pairs() const { return clamped_; }

  cplx evaluate(Index i, Index j, double f) const {
    if (i < 0 || i >= M_ || j < 0 || j >= J_) throw std::invalid_argument("LosChannelModel: index out of range");
    if (!(f > 0.0)) throw std::invalid_argument("LosChannelModel: frequency must be positive");
    const double d = distance_(i, j);
    return amplitude_(i, j) * (kSpeedOfLight / f) * std::polar(1.0, -2.0 * kPi * f * d / kSpeedOfLight);
  }

 private:
  Index M_ = 0;
  Index J_ = 0;
  RMat distance_;
  RMat amplitude_;
  Index clamped_ = 0;
};

inline cplx evaluate_los_channel(const LosChannelModel& model, Index i, Index j, double f) {
  return model.evaluate(i, j, f);
}

/// Source→RIS channel: tap list or analytic LOS, plus per-source transmission
/// offsets applied as exp(-2πi f Δ_j) at baseband frequency f.
struct ChannelModel {
  std::variant<TapChannel, LosChannelModel> kind;
  std::vector<double> offsets;

  Index elements() const {
    return std::visit([](const auto& k) { return k.elements(); }, kind);
  }
  Index sources() const {
    return std::visit([](const auto& k) { return k.sources(); }, kind);
  }

  /// G_ij(fc + f) exp(-2πi f Δ_j) with f the baseband frequency.
  cplx response(Index i, Index j, double f, double fc) const {
    const cplx g = std::visit(
        [&](const auto& k) -> cplx {
          if constexpr (std::is_same_v<std::decay_t<decltype(k)>, TapChannel>)
            return evaluate_tap_channel(k, i, j, fc + f);
          else
            return k.evaluate(i, j, fc + f);
        },
        kind);
    const double offset = offsets.empty() ? 0.0 : offsets.at(static_cast<std::size_t>(j));
    return offset == 0.0 ? g : g * std::polar(1.0, -2.0 * kPi * f * offset);
  }

  /// M x J matrix of responses at baseband frequency f.
  CMat matrix(double f, double fc) const {
    CMat g(elements(), sources());
    for (Index i = 0; i < g.rows(); ++i)
      for (Index j = 0; j < g.cols(); ++j) g(i, j) = response(i, j, f, fc);
    return g;
  }

  /// Tap delays of pair (i, j) including the source offset.
  std::vector<double> delays(Index i, Index j) const {
    std::vector<double> out;
    const double offset = offsets.empty() ? 0.0 : offsets.at(static_cast<std::size_t>(j));
    std::visit(
        [&](const auto& k) {
          if constexpr (std::is_same_v<std::decay_t<decltype(k)>, TapChannel>) {
            for (const auto& t : k.at(i, j)) out.push_back(t.delay + offset);
          } else {
            out.push_back(k.distance(i, j) / kSpeedOfLight + offset);
          }
        },
        kind);
    return out;
  }
};

struct DelayStats {
  double delta = 0.0;
  // offsets[i * J + j] holds δ_ijℓ for every tap ℓ of the pair
  std::vector<std::vector<double>> offsets;
  Index sources = 0;

  const std::vector<double>& at(Index i, Index j) const { return offsets[static_cast<std::size_t>(i * sources + j)]; }
};

inline DelayStats delay_stats(const ChannelModel& ch) {
  const Index M = ch.elements();
  const Index J = ch.sources();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<std::vector<double>> all(static_cast<std::size_t>(M * J));
  for (Index i = 0; i < M; ++i) {
    for (Index j = 0; j < J; ++j) {
      auto& d = all[static_cast<std::size_t>(i * J + j)];
      d = ch.delays(i, j);
      for (double t : d) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
    }
  }
  if (!(lo <= hi)) throw std::invalid_argument("delay_stats: channel has no paths");
  DelayStats out;
  out.delta = 0.5 * (hi + lo);
  out.sources = J;
  for (auto& d : all)
    for (double& t : d) t -= out.delta;
  out.offsets = std::move(all);
  return out;
}

/// W times the worst-case (over the angle grid) spread of τ_i + δ_ijℓ across the
/// surface; values well below 1 indicate a narrowband architecture.
inline double narrowband_metric(const ChannelModel& ch, const RisGeometry& geom, double W,
                                const std::vector<Direction>& angle_grid) {
  if (angle_grid.empty()) throw std::invalid_argument("narrowband_metric: empty angle grid");
  const Index M = geom.size();
  if (ch.elements() != M) throw std::invalid_argument("narrowband_metric: channel/geometry size mismatch");
  const DelayStats stats = delay_stats(ch);
  RVec hi(M), lo(M);
  for (Index i = 0; i < M; ++i) {
    hi(i) = -std::numeric_limits<double>::infinity();
    lo(i) = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < ch.sources(); ++j) {
      for (double d : stats.at(i, j)) {
        hi(i) = std::max(hi(i), d);
        lo(i) = std::min(lo(i), d);
      }
    }
  }
  double worst = 0.0;
  for (const auto& dir : angle_grid) {
    double top = -std::numeric_limits<double>::infinity();
    double bottom = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < M; ++i) {
      const double tau = propagation_delay(geom.positions[i], dir);
      top = std::max(top, tau + hi(i));
      bottom = std::min(bottom, tau + lo(i));
    }
    worst = std::max(worst, top - bottom);
  }
  return W * worst;
}

/// Rule-of-thumb bound W (2 Δ_RIS + Δ_sources) / c from circumscribing diameters.
inline double narrowband_sufficient_metric(double delta_ris, double delta_sources, double W) {
  if (delta_ris < 0.0 || delta_sources < 0.0)
    throw std::invalid_argument("narrowband_sufficient_metric: negative diameter");
  return W * (2.0 * delta_ris + delta_sources) / kSpeedOfLight;
}

/// Uniform (θ, φ) grid restricted to |θ|, |φ| <= half_fov, endpoints included.
inline std::vector<Direction> field_of_view_grid(double half_fov, int points_per_axis) {
  std::vector<Direction> grid;
  const int n = std::max(points_per_axis, 1);
  for (int a = 0; a < n; ++a) {
    const double th = n == 1 ? 0.0 : -half_fov + 2.0 * half_fov * a / (n - 1);
    for (int b = 0; b < n; ++b) {
      const double ph = n == 1 ? 0.0 : -half_fov + 2.0 * half_fov * b / (n - 1);
      grid.push_back({th, ph});
    }
  }
  return grid;
}

}  // namespace risbp

// Copyright 2026 The flowlearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Ring of single-axis flow sensors: forward model with directivity and the
// two-sensor inversion that recovers the instantaneous velocity vector.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "flowlearn/error.hpp"
#include "flowlearn/random.hpp"

namespace flowlearn {

inline constexpr double kDegree = std::numbers::pi / 180.0;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

struct RigConfig {
  int n_sensors = 8;
  double accurate_limit = 55.0 * kDegree;
  double cutoff = 75.0 * kDegree;
  double full_scale_error = 0.05;  // m/s
  double range_min = 0.0;
  double range_max = 1.0;
  bool noise = true;

  /// Sensor noise std from the full-scale rating (3-sigma rule).
  double sensor_noise_std() const { return full_scale_error / 3.0; }

  /// Mounting angle of sensor j relative to the robot, evenly spaced.
  double relative_heading(int j) const {
    return 2.0 * std::numbers::pi * j / n_sensors;
  }

  void validate() const {
    if (n_sensors < 3) throw ArgumentError("rig needs at least three sensors");
    if (!(accurate_limit > 0.0 && accurate_limit < cutoff)) {
      throw ArgumentError("directivity limits must satisfy 0 < accurate < cutoff");
    }
    if (cutoff >= std::numbers::pi / 2.0 + 0.5) {
      throw ArgumentError("directivity cutoff too wide");
    }
    if (full_scale_error < 0.0) throw ArgumentError("full-scale error must be >= 0");
    if (!(range_max > range_min)) throw ArgumentError("empty sensor range");
  }
};

struct RigReading {
  std::vector<double> s;  // one non-negative output per sensor (m/s)
  double heading = 0.0;   // robot heading used for reconstruction (rad)
  double t = 0.0;
  bool saturated = false;
};

namespace detail {

// Directivity: exact cosine response up to the accurate limit, linear
// roll-off to zero at the cutoff, blind beyond.
inline double directivity_response(const RigConfig& cfg, double q, double off_axis) {
  const double a = std::abs(off_axis);
  if (a <= cfg.accurate_limit) return q * std::cos(a);
  if (a >= cfg.cutoff) return 0.0;
  const double w = (cfg.cutoff - a) / (cfg.cutoff - cfg.accurate_limit);
  return q * std::cos(a) * w;
}

}  // namespace detail

/// Forward model. `rng == nullptr` (or cfg.noise == false) gives noiseless
/// outputs. Sensors beyond the cutoff read exactly zero.
inline RigReading simulate_reading(const RigConfig& cfg, double u, double v,
                                   double heading, Rng* rng, double t = 0.0) {
  RigReading out;
  out.s.resize(cfg.n_sensors);
  out.heading = heading;
  out.t = t;
  const double q = std::hypot(u, v);
  const double theta = std::atan2(v, u);
  const double gamma = cfg.sensor_noise_std();
  const bool noisy = cfg.noise && rng != nullptr && gamma > 0.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  if (q > cfg.range_max) out.saturated = true;
  for (int j = 0; j < cfg.n_sensors; ++j) {
    const double off = wrap_angle(theta - heading - cfg.relative_heading(j));
    if (q == 0.0 || std::abs(off) >= cfg.cutoff) {
      out.s[j] = 0.0;
      continue;
    }
    double s = detail::directivity_response(cfg, q, off);
    if (noisy) s += gamma * normal(*rng);
    if (s > cfg.range_max) {
      s = cfg.range_max;
      out.saturated = true;
    }
    out.s[j] = std::max(cfg.range_min, s);
  }
  return out;
}

inline RigReading simulate_reading(const RigConfig& cfg, double u, double v,
                                   double heading, std::uint64_t noise_seed) {
  Rng rng(noise_seed);
  return simulate_reading(cfg, u, v, heading, &rng);
}

struct Reconstruction {
  double u = 0.0;
  double v = 0.0;
  double q = 0.0;
  double theta = 0.0;
  int j = 0;  // highest reading
  int l = 0;  // second highest
  bool non_adjacent = false;     // the two maxima are not neighbors
  bool outside_sector = false;   // theta not between the two sensor axes
  bool warning() const { return non_adjacent || outside_sector; }
};

/// Recovers the instantaneous velocity from the two strongest sensors.
inline Reconstruction reconstruct_velocity(const RigConfig& cfg, const RigReading& r) {
  const int n = static_cast<int>(r.s.size());
  if (n != cfg.n_sensors) throw ArgumentError("reading has wrong sensor count");
  // Two largest; ties go to the lower index.
  int j = -1;
  int l = -1;
  for (int k = 0; k < n; ++k) {
    if (j < 0 || r.s[k] > r.s[j]) {
      l = j;
      j = k;
    } else if (l < 0 || r.s[k] > r.s[l]) {
      l = k;
    }
  }
  if (!(r.s[j] > 0.0) || !(r.s[l] > 0.0)) {
    throw FlowUndetectableError("flow undetectable: fewer than two positive readings");
  }
  const double bj = r.heading + cfg.relative_heading(j);
  const double bl = r.heading + cfg.relative_heading(l);
  const double sj = r.s[j];
  const double sl = r.s[l];
  const double sin_jl = std::sin(bj - bl);
  if (std::abs(sin_jl) < 1e-12) {
    throw SingularGeometryError("top sensors have parallel axes");
  }
  const double xi = sin_jl > 0.0 ? 1.0 : -1.0;
  Reconstruction out;
  out.j = j;
  out.l = l;
  out.theta = std::atan2(xi * (sj * std::cos(bl) - sl * std::cos(bj)),
                         xi * (-sj * std::sin(bl) + sl * std::sin(bj)));
  const double c = std::cos(out.theta - bj);
  if (std::abs(c) < 1e-12) {
    throw FlowUndetectableError("flow angle orthogonal to the strongest sensor");
  }
  out.q = sj / c;
  out.u = out.q * std::cos(out.theta);
  out.v = out.q * std::sin(out.theta);
  const int gap = std::abs(j - l);
  out.non_adjacent = std::min(gap, n - gap) > 1;
  const double span = std::abs(wrap_angle(bj - bl));
  const double dj = std::abs(wrap_angle(out.theta - bj));
  const double dl = std::abs(wrap_angle(out.theta - bl));
  out.outside_sector = dj + dl > span + 1e-9;
  return out;
}

struct SensorNoiseVariances {
  double u = 0.0;
  double v = 0.0;
};

/// Linearized variance of the reconstructed components due to sensor noise
/// on the pair (j, l) at robot heading `heading`.
inline SensorNoiseVariances sensor_noise_variances(const RigConfig& cfg, int j, int l,
                                                   double heading) {
  if (j == l) throw ArgumentError("sensor pair must be distinct");
  const double bj = heading + cfg.relative_heading(j);
  const double bl = heading + cfg.relative_heading(l);
  const double s = std::sin(bj - bl);
  if (std::abs(s) < 1e-12) throw SingularGeometryError("parallel sensor axes");
  const double a2 = 1.0 / (s * s);
  const double g2 = std::pow(cfg.sensor_noise_std(), 2);
  const double sj = std::sin(bj), sl = std::sin(bl);
  const double cj = std::cos(bj), cl = std::cos(bl);
  return {a2 * (sj * sj + sl * sl) * g2, a2 * (cj * cj + cl * cl) * g2};
}

}  // namespace flowlearn

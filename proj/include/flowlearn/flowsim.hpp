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

// Synthetic ground truth: analytic mean velocity and turbulent intensity
// fields plus an Ornstein-Uhlenbeck fluctuation process per in-plane
// velocity component.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowlearn/error.hpp"
#include "flowlearn/geometry.hpp"
#include "flowlearn/random.hpp"

namespace flowlearn {

/// Mean flow properties at one point.
struct FlowState {
  double u = 0.0;
  double v = 0.0;
  double intensity = 0.0;
};

using FlowFieldFn = std::function<FlowState(Point2)>;
using ScalarFieldFn = std::function<double(Point2)>;

/// Knobs of the analytic presets. Unused entries are ignored by a preset.
struct PresetParams {
  std::string name = "room";
  double q_ref = 0.78;  // normalizing speed for the intensity
  double q_in = 0.78;   // channel inflow speed
  double inflow_angle = 0.0;  // channel direction (rad)
  double loop_speed = 0.55;   // room: peak speed of the recirculation cell
  double jet_speed = 0.9;     // room: inlet jet strength
  double jet_x = 1.9;
  double jet_width = 0.18;
  double jet_decay = 1.1;
  double eddy_strength = -0.25;  // room: corner eddy (negative = clockwise)
  Point2 eddy_center{0.4, 1.8};
  double eddy_radius = 0.3;
  double vortex_circulation = 0.6;  // vortex pair
  double vortex_separation = 0.8;
  double vortex_core = 0.2;
  double base_intensity = 0.07;
  double jet_intensity = 0.08;
  double wake_intensity = 0.06;
  double t_star = 0.26;
  double t_star_variation = 0.1;  // relative spread of t*(x) over the domain
};

/// The "real world": analytic mean fields and a fluctuation time scale.
class FlowGroundTruth {
 public:
  FlowGroundTruth(Domain2D domain, double q_ref, FlowFieldFn mean,
                  ScalarFieldFn timescale)
      : domain_(std::move(domain)),
        q_ref_(q_ref),
        mean_(std::move(mean)),
        timescale_(std::move(timescale)) {
    if (!(q_ref_ > 0.0)) throw ArgumentError("q_ref must be positive");
  }

  const Domain2D& domain() const { return domain_; }
  double q_ref() const { return q_ref_; }

  /// Exact ground-truth values; x must lie in the free part of the domain.
  FlowState field_query(Point2 x) const {
    domain_.require_free(x);
    return evaluate(x);
  }

  /// Unchecked evaluation; the analytic fields are defined on the whole plane.
  FlowState evaluate(Point2 x) const {
    FlowState s = mean_(x);
    s.intensity = std::max(0.0, s.intensity);
    return s;
  }

  double integral_timescale(Point2 x) const { return timescale_(x); }

  /// Stationary standard deviation of each in-plane fluctuation component.
  double fluctuation_std(Point2 x) const { return q_ref_ * evaluate(x).intensity; }

  const FlowFieldFn& mean_function() const { return mean_; }

 private:
  Domain2D domain_;
  double q_ref_;
  FlowFieldFn mean_;
  ScalarFieldFn timescale_;
};

namespace detail {

// (1 - (r/R)^2)_+^2, exactly zero beyond R.
inline double compact_window(double r, double radius) {
  const double s = 1.0 - (r * r) / (radius * radius);
  return s > 0.0 ? s * s : 0.0;
}

// Potential-flow perturbation of a uniform stream U past a cylinder of
// radius a centered at c, tapered to zero at 4a. Inside the body the
// distance is clamped to a; the obstacle interior is never queried.
inline std::pair<double, double> cylinder_perturbation(Point2 p, Point2 c,
                                                       double a, double ux,
                                                       double uy) {
  double zx = p.x - c.x;
  double zy = p.y - c.y;
  const double r = std::hypot(zx, zy);
  const double w = compact_window(r, 4.0 * a);
  if (w == 0.0 || r == 0.0) return {0.0, 0.0};
  if (r < a) {
    zx *= a / r;
    zy *= a / r;
  }
  const double r4 = std::pow(zx * zx + zy * zy, 2);
  // 1/z^2 = conj(z^2)/|z|^4
  const double inv_re = (zx * zx - zy * zy) / r4;
  const double inv_im = -2.0 * zx * zy / r4;
  // u - i v = -U a^2 / z^2
  const double w_re = -a * a * (ux * inv_re - uy * inv_im);
  const double w_im = -a * a * (ux * inv_im + uy * inv_re);
  return {w * w_re, -w * w_im};
}

inline double gaussian_bump(Point2 p, Point2 c, double width) {
  return std::exp(-squared_distance(p, c) / (width * width));
}

inline ScalarFieldFn timescale_field(const Domain2D& d, double t0, double spread) {
  const double h = d.height();
  return [t0, spread, h](Point2 p) {
    return t0 * (1.0 + spread * (p.y / h - 0.5));
  };
}

}  // namespace detail

/// Recirculating room: a single cell driven by an inlet jet near the
/// bottom-right, a clockwise corner eddy, and potential-flow deflection
/// around each obstacle. Intensity peaks in the jet and obstacle wakes.
inline FlowGroundTruth make_room_flow(const Domain2D& domain, const PresetParams& p) {
  const double W = domain.width();
  const double H = domain.height();
  const double pi = std::numbers::pi;
  auto base = [=](Point2 x) {
    const double sx = std::sin(pi * x.x / W), cx = std::cos(pi * x.x / W);
    const double sy = std::sin(pi * x.y / H), cy = std::cos(pi * x.y / H);
    double u = p.loop_speed * sx * cy;
    double v = -p.loop_speed * cx * sy;
    const double jx = (x.x - p.jet_x) / p.jet_width;
    v += p.jet_speed * std::exp(-jx * jx) * std::exp(-x.y / p.jet_decay) * sy;
    const double ex = x.x - p.eddy_center.x;
    const double ey = x.y - p.eddy_center.y;
    const double g = std::exp(-(ex * ex + ey * ey) / (p.eddy_radius * p.eddy_radius));
    u += -p.eddy_strength * ey / p.eddy_radius * g;
    v += p.eddy_strength * ex / p.eddy_radius * g;
    return std::pair{u, v};
  };
  std::vector<Rect> obstacles = domain.obstacles();
  FlowFieldFn mean = [=](Point2 x) {
    auto [u, v] = base(x);
    double intensity = p.base_intensity;
    const double jx = (x.x - p.jet_x) / (1.5 * p.jet_width);
    intensity += p.jet_intensity * std::exp(-jx * jx) * std::exp(-x.y / (1.5 * p.jet_decay));
    for (const Rect& r : obstacles) {
      const Point2 c = r.center();
      const double a = 0.5 * std::min(r.width(), r.height());
      auto [uc, vc] = base(c);
      auto [du, dv] = detail::cylinder_perturbation(x, c, a, uc, vc);
      u += du;
      v += dv;
      const double sc = std::max(std::hypot(uc, vc), 1e-9);
      const Point2 wake = c + (3.0 * a / sc) * Point2{uc, vc};
      intensity += p.wake_intensity * detail::gaussian_bump(x, wake, 2.5 * a);
    }
    return FlowState{u, v, intensity};
  };
  return FlowGroundTruth(domain, p.q_ref, std::move(mean),
                         detail::timescale_field(domain, p.t_star, p.t_star_variation));
}

/// Two co-rotating Lamb-Oseen vortices placed symmetrically about the domain
/// center, so the mean velocity vanishes at the center.
inline FlowGroundTruth make_vortex_pair_flow(const Domain2D& domain, const PresetParams& p) {
  const Point2 c{0.5 * domain.width(), 0.5 * domain.height()};
  const Point2 c1 = c + Point2{-0.5 * p.vortex_separation, 0.0};
  const Point2 c2 = c + Point2{0.5 * p.vortex_separation, 0.0};
  const double pi = std::numbers::pi;
  FlowFieldFn mean = [=](Point2 x) {
    double u = 0.0, v = 0.0, intensity = p.base_intensity;
    for (Point2 cc : {c1, c2}) {
      const double dx = x.x - cc.x;
      const double dy = x.y - cc.y;
      const double r2 = dx * dx + dy * dy;
      const double rc2 = p.vortex_core * p.vortex_core;
      // v_theta / r, finite at the core.
      const double f = r2 > 1e-300 ? p.vortex_circulation / (2.0 * pi * r2) *
                                         (1.0 - std::exp(-r2 / rc2))
                                   : p.vortex_circulation / (2.0 * pi * rc2);
      u += -f * dy;
      v += f * dx;
      intensity += p.jet_intensity * std::exp(-r2 / (4.0 * rc2));
    }
    return FlowState{u, v, intensity};
  };
  return FlowGroundTruth(domain, p.q_ref, std::move(mean),
                         detail::timescale_field(domain, p.t_star, p.t_star_variation));
}

/// Uniform stream of speed q_in deflected around obstacles; the deflection
/// vanishes exactly beyond four equivalent radii of each obstacle.
inline FlowGroundTruth make_channel_flow(const Domain2D& domain, const PresetParams& p) {
  const double ux = p.q_in * std::cos(p.inflow_angle);
  const double uy = p.q_in * std::sin(p.inflow_angle);
  std::vector<Rect> obstacles = domain.obstacles();
  FlowFieldFn mean = [=](Point2 x) {
    double u = ux, v = uy, intensity = p.base_intensity;
    for (const Rect& r : obstacles) {
      const Point2 c = r.center();
      const double a = 0.5 * std::min(r.width(), r.height());
      auto [du, dv] = detail::cylinder_perturbation(x, c, a, ux, uy);
      u += du;
      v += dv;
      const Point2 wake = c + (3.0 * a / p.q_in) * Point2{ux, uy};
      intensity += p.wake_intensity * detail::gaussian_bump(x, wake, 2.5 * a);
    }
    return FlowState{u, v, intensity};
  };
  return FlowGroundTruth(domain, p.q_ref, std::move(mean),
                         detail::timescale_field(domain, p.t_star, p.t_star_variation));
}

inline FlowGroundTruth make_preset(const Domain2D& domain, const PresetParams& p) {
  if (p.name == "room") return make_room_flow(domain, p);
  if (p.name == "vortex_pair") return make_vortex_pair_flow(domain, p);
  if (p.name == "channel") return make_channel_flow(domain, p);
  throw ArgumentError("unknown ground-truth preset '" + p.name + "'");
}

/// Stationary Ornstein-Uhlenbeck process for the two in-plane fluctuation
/// components at a fixed point. Var[eps_k] = sigma^2 per component and the
/// autocorrelation exp(-tau/theta) integrates to theta.
class FluctuationProcess {
 public:
  FluctuationProcess(double sigma, double theta, std::uint64_t seed)
      : sigma_(sigma), theta_(theta), rng_(seed) {
    if (sigma_ < 0.0) throw ArgumentError("fluctuation std must be non-negative");
    if (!(theta_ > 0.0)) throw ArgumentError("relaxation time must be positive");
    // Start from the stationary distribution.
    state_[0] = sigma_ * normal_(rng_);
    state_[1] = sigma_ * normal_(rng_);
  }

  double sigma() const { return sigma_; }
  double theta() const { return theta_; }
  std::pair<double, double> current() const { return {state_[0], state_[1]}; }

  /// Advances both components by dt using the exact transition density.
  std::pair<double, double> step(double dt) {
    if (dt != cached_dt_) {
      cached_dt_ = dt;
      decay_ = std::exp(-dt / theta_);
      kick_ = sigma_ * std::sqrt(std::max(0.0, 1.0 - decay_ * decay_));
    }
    state_[0] = decay_ * state_[0] + kick_ * normal_(rng_);
    state_[1] = decay_ * state_[1] + kick_ * normal_(rng_);
    return current();
  }

 private:
  double sigma_;
  double theta_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double state_[2] = {0.0, 0.0};
  double cached_dt_ = -1.0;
  double decay_ = 0.0;
  double kick_ = 0.0;
};

/// Instantaneous velocity series q(x,t) = q(x) + eps(x,t).
struct InstantaneousSeries {
  std::vector<double> t;
  std::vector<double> u;
  std::vector<double> v;
};

inline double uniform_step(std::span<const double> t_grid) {
  if (t_grid.size() < 2) throw ArgumentError("time grid needs at least two samples");
  const double dt = t_grid[1] - t_grid[0];
  if (!(dt > 0.0)) throw ArgumentError("time grid must be strictly increasing");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double d = t_grid[k] - t_grid[k - 1];
    if (std::abs(d - dt) > 1e-9 * std::max(1.0, std::abs(t_grid[k]))) {
      throw ArgumentError("time grid is not uniform");
    }
  }
  return dt;
}

inline InstantaneousSeries sample_instantaneous(const FlowGroundTruth& gt, Point2 x,
                                                std::span<const double> t_grid,
                                                std::uint64_t seed) {
  const FlowState mean = gt.field_query(x);
  const double dt = uniform_step(t_grid);
  InstantaneousSeries out;
  out.t.assign(t_grid.begin(), t_grid.end());
  out.u.resize(t_grid.size());
  out.v.resize(t_grid.size());
  const double sigma = gt.q_ref() * mean.intensity;
  if (sigma == 0.0) {
    std::fill(out.u.begin(), out.u.end(), mean.u);
    std::fill(out.v.begin(), out.v.end(), mean.v);
    return out;
  }
  FluctuationProcess proc(sigma, gt.integral_timescale(x), seed);
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const auto [eu, ev] = k == 0 ? proc.current() : proc.step(dt);
    out.u[k] = mean.u + eu;
    out.v[k] = mean.v + ev;
  }
  return out;
}

/// Uniform time grid of n samples at the given rate.
inline std::vector<double> uniform_time_grid(std::size_t n, double rate_hz) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) / rate_hz;
  return t;
}

// ---------------------------------------------------------------------------
// Prior models generated by corrupting the ground truth.

/// Deterministic distortion of the ground truth, standing in for an
/// imperfect numerical solution.
struct Corruption {
  double amplitude = 1.0;       // velocity scale
  double rotation = 0.0;        // rotation of the velocity vector (rad)
  Point2 shift{0.0, 0.0};       // the model sees the truth displaced by shift
  double intensity_scale = 1.0;
  double intensity_offset = 0.0;
};

inline FlowFieldFn corrupt(const FlowGroundTruth& gt, const Corruption& c) {
  const FlowFieldFn truth = gt.mean_function();
  const double cr = std::cos(c.rotation);
  const double sr = std::sin(c.rotation);
  return [truth, c, cr, sr](Point2 x) {
    const FlowState s = truth(x - c.shift);
    const double u = c.amplitude * (cr * s.u - sr * s.v);
    const double v = c.amplitude * (sr * s.u + cr * s.v);
    const double i = std::max(0.0, c.intensity_scale * s.intensity + c.intensity_offset);
    return FlowState{u, v, i};
  };
}

}  // namespace flowlearn

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

// Time-series processing: from instantaneous velocity samples to a
// decorrelated measurement with its full noise budget.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "flowlearn/error.hpp"
#include "flowlearn/geometry.hpp"
#include "flowlearn/random.hpp"

namespace flowlearn {

/// Per-sample warning bits.
enum SampleFlag : unsigned {
  kSampleOk = 0,
  kSampleNonAdjacent = 1u << 0,
  kSampleOutsideSector = 1u << 1,
  kSampleSaturated = 1u << 2,
};

/// Instantaneous reconstructed velocities at one location, uniform in time.
/// The per-sample sensor-noise variances depend on which sensor pair
/// resolved the sample.
struct VelocitySampleSeries {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> noise_u;  // gamma^2_{u,s}(x, t_k)
  std::vector<double> noise_v;  // gamma^2_{v,s}(x, t_k)
  std::vector<unsigned> flags;

  std::size_t size() const { return u.size(); }

  void validate() const {
    const std::size_t n = u.size();
    if (t.size() != n || v.size() != n || noise_u.size() != n ||
        noise_v.size() != n || flags.size() != n) {
      throw ArgumentError("series components have unequal lengths");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(u[k]) || !std::isfinite(v[k])) {
        throw ArgumentError("series contains non-finite samples");
      }
    }
  }

  void push_back(double tk, double uk, double vk, double nu, double nv, unsigned f) {
    t.push_back(tk);
    u.push_back(uk);
    v.push_back(vk);
    noise_u.push_back(nu);
    noise_v.push_back(nv);
    flags.push_back(f);
  }
};

enum class Component { kU, kV };

inline std::span<const double> component(const VelocitySampleSeries& s, Component c) {
  return c == Component::kU ? std::span<const double>(s.u) : std::span<const double>(s.v);
}

inline double mean_of(std::span<const double> y) {
  if (y.empty()) return 0.0;
  return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

namespace detail {

inline double autocorrelation_at(std::span<const double> y, double mean, std::size_t lag) {
  const std::size_t n = y.size();
  double acc = 0.0;
  for (std::size_t k = 0; k + lag < n; ++k) acc += (y[k] - mean) * (y[k + lag] - mean);
  return acc / static_cast<double>(n);
}

}  // namespace detail

/// Biased sample autocovariance rho(l) = (1/n) sum_{k}^{n-l} (y_k - ybar)(y_{k+l} - ybar)
/// for l = 0..max_lag.
inline std::vector<double> sample_autocorrelation(std::span<const double> y,
                                                  std::size_t max_lag) {
  if (max_lag < 1 || y.size() <= max_lag) {
    throw ArgumentError("autocorrelation needs n > max_lag >= 1");
  }
  const double m = mean_of(y);
  std::vector<double> rho(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) rho[l] = detail::autocorrelation_at(y, m, l);
  return rho;
}

struct TimescaleEstimate {
  double t_star = 0.0;
  std::size_t zero_crossing = 0;  // first lag L with rho(L) <= 0
  bool truncated = false;         // no crossing up to max_lag
};

/// Integral of a normalized autocorrelation up to its first zero crossing L:
///   t* = dt * (rho_0 / 2 + sum_{l=0}^{L-2} (rho_l + rho_{l+1}) / 2)
/// With no crossing, the sum runs through the last supplied lag.
inline TimescaleEstimate integrate_to_zero_crossing(std::span<const double> rho_normalized,
                                                    double dt) {
  if (rho_normalized.empty()) throw ArgumentError("empty autocorrelation");
  TimescaleEstimate out;
  std::size_t L = rho_normalized.size();
  for (std::size_t l = 1; l < rho_normalized.size(); ++l) {
    if (rho_normalized[l] <= 0.0) {
      L = l;
      break;
    }
  }
  out.truncated = L == rho_normalized.size();
  out.zero_crossing = L;
  double acc = 0.5 * rho_normalized[0];
  for (std::size_t l = 0; l + 2 <= L; ++l) {
    acc += 0.5 * (rho_normalized[l] + rho_normalized[l + 1]);
  }
  out.t_star = dt * acc;
  return out;
}

/// Integral time scale of one component. Lags are evaluated lazily and
/// stop at the first zero crossing.
inline TimescaleEstimate estimate_integral_timescale(std::span<const double> y, double dt,
                                                     std::size_t max_lag) {
  if (y.size() < 2) throw InsufficientSamplesError("need at least two samples");
  max_lag = std::min(max_lag, y.size() - 1);
  const double m = mean_of(y);
  const double r0 = detail::autocorrelation_at(y, m, 0);
  const double scale = std::max(1.0, m * m);
  if (!(r0 > 1e-28 * scale)) {
    throw DegenerateSeriesError("constant series has no integral time scale");
  }
  std::vector<double> rho{1.0};
  for (std::size_t l = 1; l <= max_lag; ++l) {
    rho.push_back(detail::autocorrelation_at(y, m, l) / r0);
    if (rho.back() <= 0.0) break;
  }
  return integrate_to_zero_crossing(rho, dt);
}

inline TimescaleEstimate estimate_integral_timescale(const VelocitySampleSeries& s,
                                                     Component c, std::size_t max_lag) {
  return estimate_integral_timescale(component(s, c), s.dt, max_lag);
}

/// Rig-level time scale: the maximum over the in-plane components. A
/// constant component is skipped; both constant is an error.
inline TimescaleEstimate estimate_integral_timescale(const VelocitySampleSeries& s,
                                                     std::size_t max_lag) {
  std::optional<TimescaleEstimate> best;
  for (Component c : {Component::kU, Component::kV}) {
    try {
      TimescaleEstimate e = estimate_integral_timescale(s, c, max_lag);
      if (!best || e.t_star > best->t_star) {
        const bool trunc = best && best->truncated;
        best = e;
        best->truncated = best->truncated || trunc;
      } else {
        best->truncated = best->truncated || e.truncated;
      }
    } catch (const DegenerateSeriesError&) {
    }
  }
  if (!best) throw DegenerateSeriesError("both velocity components are constant");
  return *best;
}

/// Stride that separates retained samples by at least 2 t*.
inline std::size_t decorrelation_stride(double t_star, double dt) {
  if (t_star < 0.0) throw ArgumentError("t_star must be non-negative");
  const double ratio = 2.0 * t_star / dt;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio - 1e-9)));
}

struct DecorrelatedSeries {
  VelocitySampleSeries series;
  std::size_t stride = 1;
  bool insufficient = false;  // fewer than two samples survived
};

inline DecorrelatedSeries decorrelate(const VelocitySampleSeries& s, double t_star) {
  DecorrelatedSeries out;
  out.stride = decorrelation_stride(t_star, s.dt);
  out.series.dt = s.dt * static_cast<double>(out.stride);
  for (std::size_t k = 0; k < s.size(); k += out.stride) {
    out.series.push_back(s.t[k], s.u[k], s.v[k], s.noise_u[k], s.noise_v[k], s.flags[k]);
  }
  out.insufficient = out.series.size() < 2;
  return out;
}

struct SampleMoments {
  double mean = 0.0;
  double var_of_mean = 0.0;  // sample_var / n
  double sample_var = 0.0;   // unbiased, 1/(n-1)
  std::size_t n = 0;
};

inline SampleMoments mean_and_variance(std::span<const double> y) {
  if (y.size() < 2) throw InsufficientSamplesError("need at least two decorrelated samples");
  SampleMoments m;
  m.n = y.size();
  // Sums are taken about the first sample, so constant input gives exactly
  // zero variance.
  const double shift = y[0];
  double s = 0.0, s2 = 0.0;
  for (double yk : y) {
    s += yk - shift;
    s2 += (yk - shift) * (yk - shift);
  }
  const double n = static_cast<double>(m.n);
  m.mean = shift + s / n;
  m.sample_var = std::max(0.0, s2 - s * s / n) / (n - 1.0);
  m.var_of_mean = m.sample_var / static_cast<double>(m.n);
  return m;
}

struct IntensityEstimate {
  double value = 0.0;
  bool clamped = false;  // noise subtraction overshot; radicand set to zero
};

/// Turbulent intensity from in-plane sample variances with the mean sensor
/// noise removed. The unobserved third component is taken as the average of
/// the two in-plane terms.
inline IntensityEstimate intensity_from_variances(double var_u, double var_v,
                                                  double noise_u, double noise_v,
                                                  double q_ref) {
  if (!(q_ref > 0.0)) throw ArgumentError("q_ref must be positive");
  const double in_plane = (var_u - noise_u) + (var_v - noise_v);
  const double radicand = 1.5 * in_plane;
  IntensityEstimate out;
  out.clamped = radicand < 0.0;
  out.value = std::sqrt(std::max(0.0, radicand)) / (std::sqrt(3.0) * q_ref);
  return out;
}

inline IntensityEstimate intensity_estimate(std::span<const double> u,
                                            std::span<const double> v,
                                            double noise_u, double noise_v, double q_ref) {
  const double var_u = u.size() >= 2 ? mean_and_variance(u).sample_var : 0.0;
  const double var_v = v.size() >= 2 ? mean_and_variance(v).sample_var : 0.0;
  return intensity_from_variances(var_u, var_v, noise_u, noise_v, q_ref);
}

/// Bootstrap variance of the intensity estimate. Each batch draws the same
/// sample indices from u and v (paired resampling).
inline double bootstrap_intensity_variance(std::span<const double> u,
                                           std::span<const double> v, double noise_u,
                                           double noise_v, double q_ref, std::size_t n_b,
                                           std::uint64_t seed) {
  const std::size_t n = u.size();
  if (n < 2 || v.size() != n) throw InsufficientSamplesError("bootstrap needs n >= 2 paired samples");
  if (n_b < 2) throw ArgumentError("bootstrap needs at least two batches");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> estimates(n_b);
  std::vector<double> bu(n), bv(n);
  for (std::size_t b = 0; b < n_b; ++b) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = pick(rng);
      bu[k] = u[idx];
      bv[k] = v[idx];
    }
    estimates[b] = intensity_estimate(bu, bv, noise_u, noise_v, q_ref).value;
  }
  return mean_and_variance(estimates).sample_var;
}

struct ComponentVariances {
  double u = 0.0;
  double v = 0.0;
};

/// Mean heading-error variances: a heading error rotates the reconstructed
/// vector, so u picks up gamma_beta^2 v^2 and v picks up gamma_beta^2 u^2.
inline ComponentVariances heading_error_variances(std::span<const double> u,
                                                  std::span<const double> v,
                                                  double gamma_beta) {
  if (u.size() != v.size()) throw ArgumentError("component lengths differ");
  if (u.empty()) return {};
  double su = 0.0, sv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    su += u[k] * u[k];
    sv += v[k] * v[k];
  }
  const double g2 = gamma_beta * gamma_beta;
  const double n = static_cast<double>(u.size());
  return {g2 * sv / n, g2 * su / n};
}

/// Sensor noise is already inside the sample variance; only the heading
/// term is added on top of the variance of the mean.
inline ComponentVariances total_measurement_variance(double var_of_mean_u,
                                                     double var_of_mean_v,
                                                     double heading_u, double heading_v) {
  return {var_of_mean_u + heading_u, var_of_mean_v + heading_v};
}

/// Measurement-level warning bits.
enum RecordFlag : unsigned {
  kRecordOk = 0,
  kRecordTruncatedTimescale = 1u << 0,
  kRecordInsufficientSamples = 1u << 1,
  kRecordIntensityClamped = 1u << 2,
  kRecordSampleWarnings = 1u << 3,
  kRecordDroppedSamples = 1u << 4,
  kRecordSaturated = 1u << 5,
};

/// One processed measurement and its noise budget.
struct MeasurementRecord {
  Point2 x;                  // nominal location
  double heading = 0.0;      // nominal heading
  std::size_t n = 0;         // decorrelated samples
  double y_u = 0.0;
  double y_v = 0.0;
  double y_i = 0.0;
  double var_u_hat = 0.0;    // variance of the sample mean
  double var_v_hat = 0.0;
  double sample_var_u = 0.0;
  double sample_var_v = 0.0;
  double noise_u = 0.0;      // mean sensor-noise variance
  double noise_v = 0.0;
  double heading_u = 0.0;    // mean heading-error variance
  double heading_v = 0.0;
  double sigma2_u = 0.0;     // total measurement variance
  double sigma2_v = 0.0;
  double sigma2_i = 0.0;     // bootstrap
  double t_star = 0.0;
  std::size_t raw_samples = 0;
  std::size_t warned_samples = 0;
  std::size_t dropped_samples = 0;
  unsigned flags = kRecordOk;
  Point2 actual_x;           // simulator provenance: where it was really taken
  double actual_heading = 0.0;
};

struct ProcessingOptions {
  double q_ref = 0.78;
  double heading_std = 5.0 * 3.14159265358979323846 / 180.0;  // gamma_beta (rad)
  std::size_t bootstrap_batches = 200;
  std::size_t max_lag = 400;
  std::uint64_t bootstrap_seed = 0;
};

/// Turns a raw instantaneous series into a measurement record: time scale,
/// down-sampling, sample moments, intensity and all variance terms.
inline MeasurementRecord process_series(const VelocitySampleSeries& raw,
                                        const ProcessingOptions& opt) {
  raw.validate();
  MeasurementRecord rec;
  rec.raw_samples = raw.size();
  for (unsigned f : raw.flags) {
    if (f & (kSampleNonAdjacent | kSampleOutsideSector)) ++rec.warned_samples;
    if (f & kSampleSaturated) rec.flags |= kRecordSaturated;
  }
  if (rec.warned_samples > 0) rec.flags |= kRecordSampleWarnings;

  TimescaleEstimate ts;
  try {
    ts = estimate_integral_timescale(raw, opt.max_lag);
  } catch (const DegenerateSeriesError&) {
    // Steady flow: every sample is independent of the noise-free mean.
    ts.t_star = 0.0;
  }
  rec.t_star = ts.t_star;
  if (ts.truncated) rec.flags |= kRecordTruncatedTimescale;

  const DecorrelatedSeries dec = decorrelate(raw, ts.t_star);
  if (dec.insufficient) {
    rec.flags |= kRecordInsufficientSamples;
    throw InsufficientSamplesError("fewer than two decorrelated samples");
  }
  const VelocitySampleSeries& s = dec.series;
  rec.n = s.size();
  const SampleMoments mu = mean_and_variance(s.u);
  const SampleMoments mv = mean_and_variance(s.v);
  rec.y_u = mu.mean;
  rec.y_v = mv.mean;
  rec.var_u_hat = mu.var_of_mean;
  rec.var_v_hat = mv.var_of_mean;
  rec.sample_var_u = mu.sample_var;
  rec.sample_var_v = mv.sample_var;
  rec.noise_u = mean_of(s.noise_u);
  rec.noise_v = mean_of(s.noise_v);

  const IntensityEstimate ie = intensity_from_variances(mu.sample_var, mv.sample_var,
                                                        rec.noise_u, rec.noise_v, opt.q_ref);
  rec.y_i = ie.value;
  if (ie.clamped) rec.flags |= kRecordIntensityClamped;
  rec.sigma2_i = bootstrap_intensity_variance(s.u, s.v, rec.noise_u, rec.noise_v, opt.q_ref,
                                              opt.bootstrap_batches, opt.bootstrap_seed);

  const ComponentVariances hv = heading_error_variances(s.u, s.v, opt.heading_std);
  rec.heading_u = hv.u;
  rec.heading_v = hv.v;
  const ComponentVariances tot =
      total_measurement_variance(rec.var_u_hat, rec.var_v_hat, hv.u, hv.v);
  rec.sigma2_u = tot.u;
  rec.sigma2_v = tot.v;
  return rec;
}

}  // namespace flowlearn

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

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "flowlearn/error.hpp"
#include "flowlearn/flowsim.hpp"
#include "flowlearn/geometry.hpp"

namespace flowlearn {

struct KernelParams {
  double sigma0 = 0.1;  // model-confidence std, field units
  double ell = 0.35;    // correlation length (m)
  double n0 = 200.0;    // nominal sample count
  double q_ref = 0.78;  // m/s

  void validate() const {
    if (!(sigma0 >= 0.0)) throw ArgumentError("sigma0 must be >= 0");
    if (!(ell > 0.0)) throw ArgumentError("correlation length must be positive");
    if (!(n0 >= 1.0)) throw ArgumentError("n0 must be >= 1");
    if (!(q_ref > 0.0)) throw ArgumentError("q_ref must be positive");
  }
};

/// (1 - d/ell)_+^2; exactly zero at and beyond ell.
inline double compact_correlation(double d, double ell) {
  if (d >= ell) return 0.0;
  const double s = 1.0 - d / ell;
  return s * s;
}

/// A location together with its kernel amplitude q_ref i(x) / sqrt(n0).
struct Site {
  Point2 x;
  double amp = 0.0;
};

/// Compactly supported prior covariance
///   k(x, x') = (sigma0^2 + q_ref^2 i(x) i(x') / n0) (1 - |x - x'|/ell)_+^2.
/// Without an intensity field the amplitude term vanishes (used for the
/// intensity field itself).
class CompactKernel {
 public:
  CompactKernel() = default;
  CompactKernel(KernelParams params, ScalarFieldFn intensity = nullptr)
      : params_(params), intensity_(std::move(intensity)) {
    params_.validate();
  }

  const KernelParams& params() const { return params_; }
  bool has_intensity() const { return static_cast<bool>(intensity_); }

  Site site(Point2 x) const {
    if (!intensity_) return {x, 0.0};
    return {x, params_.q_ref * intensity_(x) / std::sqrt(params_.n0)};
  }

  std::vector<Site> sites(std::span<const Point2> xs) const {
    std::vector<Site> out;
    out.reserve(xs.size());
    for (Point2 x : xs) out.push_back(site(x));
    return out;
  }

  double operator()(const Site& a, const Site& b) const {
    const double dx = a.x.x - b.x.x;
    const double dy = a.x.y - b.x.y;
    const double d2 = dx * dx + dy * dy;
    const double l2 = params_.ell * params_.ell;
    if (d2 >= l2) return 0.0;
    const double rho = compact_correlation(std::sqrt(d2), params_.ell);
    return (params_.sigma0 * params_.sigma0 + a.amp * b.amp) * rho;
  }

  double operator()(Point2 a, Point2 b) const { return (*this)(site(a), site(b)); }

  double variance(const Site& a) const {
    return params_.sigma0 * params_.sigma0 + a.amp * a.amp;
  }

  /// Predicted measurement-noise variance q_ref^2 i(x)^2 / n0 at a site.
  double predicted_noise(const Site& a) const { return a.amp * a.amp; }

 private:
  KernelParams params_;
  ScalarFieldFn intensity_;
};

/// Kernel value from explicit intensity values, no field lookup.
inline double prior_kernel(const KernelParams& p, Point2 x, Point2 xp, double ix, double ixp) {
  const double s2 = p.sigma0 * p.sigma0 + p.q_ref * p.q_ref * ix * ixp / p.n0;
  return s2 * compact_correlation(distance(x, xp), p.ell);
}

inline void require_distinct(std::span<const Point2> pts, double tol = 1e-12) {
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      if (distance(pts[a], pts[b]) <= tol) {
        throw DuplicateLocationError("duplicate measurement location " + to_string(pts[a]));
      }
    }
  }
}

enum class CovarianceMode { kPrior, kMeasurement };

/// Sparse symmetric covariance over `sites`. Measurement mode adds `noise`
/// on the diagonal and rejects coincident points.
inline Eigen::SparseMatrix<double> assemble_covariance(const CompactKernel& k,
                                                       std::span<const Site> sites,
                                                       CovarianceMode mode,
                                                       std::span<const double> noise = {}) {
  const std::size_t n = sites.size();
  if (mode == CovarianceMode::kMeasurement) {
    if (noise.size() != n) throw ArgumentError("noise vector size mismatch");
    std::vector<Point2> pts;
    for (const Site& s : sites) pts.push_back(s.x);
    require_distinct(pts);
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t a = 0; a < n; ++a) {
    double diag = k(sites[a], sites[a]);
    if (mode == CovarianceMode::kMeasurement) diag += noise[a];
    trip.emplace_back(a, a, diag);
    for (std::size_t b = a + 1; b < n; ++b) {
      const double v = k(sites[a], sites[b]);
      if (v != 0.0) {
        trip.emplace_back(a, b, v);
        trip.emplace_back(b, a, v);
      }
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace flowlearn

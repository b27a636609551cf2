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

// A scalar Gaussian-process field with an incrementally grown Cholesky
// factor of the measurement covariance. Evaluation grids can be attached;
// their posterior moments are then kept current at O(n G) per append.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "flowlearn/error.hpp"
#include "flowlearn/flowsim.hpp"
#include "flowlearn/kernel.hpp"

namespace flowlearn {

/// A measurement as seen by one field: the effective prior mean and total
/// diagonal variance at x (prior variance plus noise, possibly inflated by
/// location uncertainty).
struct Observation {
  Point2 x;
  double y = 0.0;
  double prior_mean = 0.0;
  double variance = 0.0;
};

/// One-step-ahead predictive density of a new observation.
struct Predictive {
  double mean = 0.0;
  double variance = 0.0;
  double log_density = 0.0;
};

inline double gaussian_log_density(double y, double mean, double variance) {
  if (!(variance > 0.0)) throw IllConditionedError("non-positive predictive variance", 0, 0);
  const double r = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

class GaussianField {
 public:
  using GridId = std::size_t;

  GaussianField() = default;
  GaussianField(ScalarFieldFn prior_mean, CompactKernel kernel)
      : mean_(std::move(prior_mean)), kernel_(std::move(kernel)) {
    if (!mean_) throw ArgumentError("prior mean function is required");
  }

  const CompactKernel& kernel() const { return kernel_; }
  double prior_mean(Point2 x) const { return mean_(x); }
  const ScalarFieldFn& prior_mean_function() const { return mean_; }
  std::size_t size() const { return obs_.size(); }
  const std::vector<Observation>& observations() const { return obs_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Observation at x with independent noise added to the prior variance.
  Observation make_observation(Point2 x, double y, double noise_variance) const {
    if (noise_variance < 0.0) throw ArgumentError("noise variance must be >= 0");
    return {x, y, mean_(x), kernel_.variance(kernel_.site(x)) + noise_variance};
  }

  /// Conditions on one more observation. Returns its predictive density
  /// given everything absorbed before.
  Predictive append(const Observation& o) {
    const std::size_t n = obs_.size();
    for (const Observation& e : obs_) {
      if (distance(e.x, o.x) <= 1e-12) {
        throw DuplicateLocationError("duplicate measurement location " + to_string(o.x));
      }
    }
    const Site s = kernel_.site(o.x);
    std::vector<double> k(n);
    for (std::size_t m = 0; m < n; ++m) k[m] = kernel_(sites_[m], s);
    std::vector<double> w = forward_solve(k);
    double ww = 0.0;
    double wz = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      ww += w[m] * w[m];
      wz += w[m] * z_[m];
    }
    double pivot = o.variance - ww;
    const double floor = 1e-12 * std::max(o.variance, 1e-300);
    if (!(pivot > floor)) {
      const double jitter = 1e-10 * (trace_ + o.variance) / static_cast<double>(n + 1);
      pivot += jitter;
      if (!(pivot > floor)) {
        throw IllConditionedError("covariance not positive definite at " + to_string(o.x),
                                  n, most_correlated(s));
      }
      warnings_.push_back("jitter added at " + to_string(o.x));
    }
    Predictive pred;
    pred.mean = o.prior_mean + wz;
    pred.variance = pivot;
    pred.log_density = gaussian_log_density(o.y, pred.mean, pred.variance);

    const double lnn = std::sqrt(pivot);
    w.push_back(lnn);
    L_.push_back(std::move(w));
    z_.push_back((o.y - pred.mean) / lnn);
    obs_.push_back(o);
    sites_.push_back(s);
    trace_ += o.variance;
    for (Grid& g : grids_) extend_grid(g);
    return pred;
  }

  /// Predictive density of o without absorbing it.
  Predictive predict_observation(const Observation& o) const {
    const Site s = kernel_.site(o.x);
    std::vector<double> k(obs_.size());
    for (std::size_t m = 0; m < obs_.size(); ++m) k[m] = kernel_(sites_[m], s);
    const std::vector<double> w = forward_solve(k);
    Predictive p;
    p.mean = o.prior_mean;
    p.variance = o.variance;
    for (std::size_t m = 0; m < w.size(); ++m) {
      p.mean += w[m] * z_[m];
      p.variance -= w[m] * w[m];
    }
    p.log_density = gaussian_log_density(o.y, p.mean, p.variance);
    return p;
  }

  /// Joint log-density of a batch under the current posterior predictive.
  double log_likelihood(std::span<const Observation> batch) const {
    const std::size_t b = batch.size();
    if (b == 0) throw ArgumentError("empty measurement batch");
    const std::size_t n = obs_.size();
    std::vector<Site> bs;
    for (const Observation& o : batch) bs.push_back(kernel_.site(o.x));
    Eigen::MatrixXd W(n, b);
    for (std::size_t j = 0; j < b; ++j) {
      std::vector<double> k(n);
      for (std::size_t m = 0; m < n; ++m) k[m] = kernel_(sites_[m], bs[j]);
      const std::vector<double> w = forward_solve(k);
      for (std::size_t m = 0; m < n; ++m) W(m, j) = w[m];
    }
    Eigen::MatrixXd C(b, b);
    Eigen::VectorXd r(b);
    for (std::size_t a = 0; a < b; ++a) {
      for (std::size_t c = 0; c < b; ++c) {
        C(a, c) = a == c ? batch[a].variance : kernel_(bs[a], bs[c]);
      }
    }
    if (n > 0) C.noalias() -= W.transpose() * W;
    Eigen::VectorXd z(n);
    for (std::size_t m = 0; m < n; ++m) z[m] = z_[m];
    for (std::size_t a = 0; a < b; ++a) {
      r[a] = batch[a].y - batch[a].prior_mean - (n > 0 ? W.col(a).dot(z) : 0.0);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedError("batch predictive covariance is singular", n, n + b - 1);
    }
    const Eigen::VectorXd a = llt.matrixL().solve(r);
    double logdet = 0.0;
    for (std::size_t i = 0; i < b; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (static_cast<double>(b) * std::log(2.0 * std::numbers::pi) + logdet +
                   a.squaredNorm());
  }

  /// Posterior moments at arbitrary points.
  Moments condition(Point2 x) const {
    const Site s = kernel_.site(x);
    Moments m{mean_(x), kernel_.variance(s)};
    if (obs_.empty()) return m;
    std::vector<double> k(obs_.size());
    bool any = false;
    for (std::size_t j = 0; j < obs_.size(); ++j) {
      k[j] = kernel_(sites_[j], s);
      any = any || k[j] != 0.0;
    }
    if (!any) return m;
    const std::vector<double> w = forward_solve(k);
    for (std::size_t j = 0; j < w.size(); ++j) {
      m.mean += w[j] * z_[j];
      m.variance -= w[j] * w[j];
    }
    m.variance = std::max(0.0, m.variance);
    return m;
  }

  std::vector<Moments> condition(std::span<const Point2> xs) const {
    std::vector<Moments> out;
    out.reserve(xs.size());
    for (Point2 x : xs) out.push_back(condition(x));
    return out;
  }

  /// Registers a point set whose posterior moments are kept current.
  GridId attach_grid(std::vector<Point2> points) {
    Grid g;
    g.points = std::move(points);
    g.sites = kernel_.sites(g.points);
    g.mean.resize(g.points.size());
    g.var.resize(g.points.size());
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      g.mean[i] = mean_(g.points[i]);
      g.var[i] = kernel_.variance(g.sites[i]);
    }
    g.prior_mean = g.mean;
    g.prior_var = g.var;
    for (std::size_t r = 0; r < obs_.size(); ++r) extend_grid(g, r);
    grids_.push_back(std::move(g));
    return grids_.size() - 1;
  }

  const std::vector<Point2>& grid_points(GridId id) const { return grid(id).points; }
  const std::vector<double>& grid_mean(GridId id) const { return grid(id).mean; }
  const std::vector<double>& grid_variance(GridId id) const { return grid(id).var; }
  const std::vector<double>& grid_prior_mean(GridId id) const { return grid(id).prior_mean; }
  const std::vector<double>& grid_prior_variance(GridId id) const { return grid(id).prior_var; }
  const std::vector<Site>& grid_sites(GridId id) const { return grid(id).sites; }

  /// Posterior moments from a fresh sparse factorization of all
  /// observations. Independent of the incremental state.
  std::vector<Moments> condition_batch(std::span<const Point2> xs) const {
    std::vector<Moments> out;
    out.reserve(xs.size());
    const std::size_t n = obs_.size();
    if (n == 0) {
      for (Point2 x : xs) out.push_back({mean_(x), kernel_.variance(kernel_.site(x))});
      return out;
    }
    std::vector<double> extra(n);
    for (std::size_t j = 0; j < n; ++j) extra[j] = obs_[j].variance - kernel_.variance(sites_[j]);
    const Eigen::SparseMatrix<double> K =
        assemble_covariance(kernel_, sites_, CovarianceMode::kMeasurement, extra);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) {
      throw IllConditionedError("batch factorization failed", 0, n - 1);
    }
    Eigen::VectorXd r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = obs_[j].y - obs_[j].prior_mean;
    const Eigen::VectorXd alpha = ldlt.solve(r);
    for (Point2 x : xs) {
      const Site s = kernel_.site(x);
      Eigen::VectorXd k(n);
      for (std::size_t j = 0; j < n; ++j) k[j] = kernel_(sites_[j], s);
      const Eigen::VectorXd sk = ldlt.solve(k);
      out.push_back({mean_(x) + k.dot(alpha), std::max(0.0, kernel_.variance(s) - k.dot(sk))});
    }
    return out;
  }

 private:
  struct Grid {
    std::vector<Point2> points;
    std::vector<Site> sites;
    std::vector<double> prior_mean;
    std::vector<double> prior_var;
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<std::vector<double>> V;  // rows of L^{-1} K(X, grid)
  };

  const Grid& grid(GridId id) const {
    if (id >= grids_.size()) throw ArgumentError("unknown grid id");
    return grids_[id];
  }

  std::vector<double> forward_solve(const std::vector<double>& k) const {
    const std::size_t n = k.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double>& row = L_[i];
      double s = k[i];
      for (std::size_t m = 0; m < i; ++m) s -= row[m] * w[m];
      w[i] = s / row[i];
    }
    return w;
  }

  void extend_grid(Grid& g) { extend_grid(g, obs_.size() - 1); }

  void extend_grid(Grid& g, std::size_t r) {
    const std::size_t G = g.points.size();
    std::vector<double> v(G);
    const Site& s = sites_[r];
    for (std::size_t i = 0; i < G; ++i) v[i] = kernel_(s, g.sites[i]);
    const std::vector<double>& row = L_[r];
    for (std::size_t m = 0; m < r; ++m) {
      const double c = row[m];
      if (c == 0.0) continue;
      const double* vm = g.V[m].data();
      for (std::size_t i = 0; i < G; ++i) v[i] -= c * vm[i];
    }
    const double inv = 1.0 / row[r];
    const double zr = z_[r];
    for (std::size_t i = 0; i < G; ++i) {
      v[i] *= inv;
      g.mean[i] += v[i] * zr;
      g.var[i] = std::max(0.0, g.var[i] - v[i] * v[i]);
    }
    g.V.push_back(std::move(v));
  }

  // Index of the absorbed site most correlated with s.
  std::size_t most_correlated(const Site& s) const {
    std::size_t best = 0;
    double best_k = -1.0;
    for (std::size_t j = 0; j < sites_.size(); ++j) {
      const double k = kernel_(sites_[j], s);
      if (k > best_k) {
        best_k = k;
        best = j;
      }
    }
    return best;
  }

  ScalarFieldFn mean_;
  CompactKernel kernel_;
  std::vector<Observation> obs_;
  std::vector<Site> sites_;
  std::vector<std::vector<double>> L_;  // row-major lower triangle
  std::vector<double> z_;               // L^{-1} (y - mu)
  double trace_ = 0.0;
  std::vector<Grid> grids_;
  std::vector<std::string> warnings_;
};

}  // namespace flowlearn

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

// Brute-force reference computations. They share no numerical code with
// the library routines they check: dense matrices, explicit inverses,
// enumeration and plain Monte Carlo.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "flowlearn/error.hpp"
#include "flowlearn/geometry.hpp"

namespace flowlearn::oracle {

/// Kernel written out from its definition.
struct KernelSpec {
  double sigma0 = 0.1;
  double ell = 0.35;
  double n0 = 200.0;
  double q_ref = 0.78;

  double operator()(Point2 a, double ia, Point2 b, double ib) const {
    const double d = std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
    const double r = std::max(0.0, 1.0 - d / ell);
    return (sigma0 * sigma0 + q_ref * q_ref * ia * ib / n0) * r * r;
  }
};

struct GpInstance {
  KernelSpec kernel;
  std::vector<Point2> x;          // measurement locations
  std::vector<double> ix;         // intensity at x
  std::vector<double> y;
  std::vector<double> mu;         // prior mean at x
  std::vector<double> noise;      // added diagonal at x
  std::vector<Point2> q;          // queries
  std::vector<double> iq;
  std::vector<double> mu_q;
};

struct GpAnswer {
  std::vector<double> mean;
  std::vector<double> variance;
};

/// Posterior by an explicit dense inverse of the measurement covariance.
inline GpAnswer dense_gp_posterior(const GpInstance& g) {
  const std::size_t n = g.x.size();
  Eigen::MatrixXd K(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) K(a, b) = g.kernel(g.x[a], g.ix[a], g.x[b], g.ix[b]);
    K(a, a) += g.noise[a];
  }
  const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
  Eigen::VectorXd r(n);
  for (std::size_t a = 0; a < n; ++a) r[a] = g.y[a] - g.mu[a];
  GpAnswer out;
  for (std::size_t j = 0; j < g.q.size(); ++j) {
    Eigen::VectorXd k(n);
    for (std::size_t a = 0; a < n; ++a) k[a] = g.kernel(g.q[j], g.iq[j], g.x[a], g.ix[a]);
    out.mean.push_back(g.mu_q[j] + k.dot(Kinv * r));
    out.variance.push_back(g.kernel(g.q[j], g.iq[j], g.q[j], g.iq[j]) - k.dot(Kinv * k));
  }
  return out;
}

/// Mixture moments by sampling: pick a component, then draw from it.
inline std::pair<double, double> mixture_monte_carlo(const std::vector<double>& means,
                                                     const std::vector<double>& variances,
                                                     const std::vector<double>& weights,
                                                     std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> z(0.0, 1.0);
  double s = 0.0, s2 = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    const std::size_t c = pick(rng);
    const double v = means[c] + std::sqrt(variances[c]) * z(rng);
    s += v;
    s2 += v * v;
  }
  const double m = s / static_cast<double>(draws);
  return {m, s2 / static_cast<double>(draws) - m * m};
}

/// Moments of y = mu(X) + e, X ~ N(x0, std^2 I), e ~ N(0, diag(X) + noise).
inline std::pair<double, double> location_monte_carlo(const std::function<double(Point2)>& mu,
                                                      const std::function<double(Point2)>& diag,
                                                      Point2 x0, double std, double noise,
                                                      std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  double s = 0.0, s2 = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    const Point2 x{x0.x + std * z(rng), x0.y + std * z(rng)};
    const double v = mu(x) + std::sqrt(diag(x) + noise) * z(rng);
    s += v;
    s2 += v * v;
  }
  const double m = s / static_cast<double>(draws);
  return {m, s2 / static_cast<double>(draws) - m * m};
}

/// log det via the eigenvalues of a symmetric matrix.
inline double log_det_spd(const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (!(es.eigenvalues()[i] > 0.0)) throw IllConditionedError("matrix is not SPD", 0, 0);
    s += std::log(es.eigenvalues()[i]);
  }
  return s;
}

/// Differential entropy of a Gaussian vector with covariance A.
inline double gaussian_entropy(const Eigen::MatrixXd& A) {
  const double n = static_cast<double>(A.rows());
  return 0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_spd(A));
}

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd& A, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd S(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) S(a, b) = A(idx[a], idx[b]);
  }
  return S;
}

struct SubsetResult {
  std::vector<std::size_t> best;
  double best_entropy = -std::numeric_limits<double>::infinity();
  std::size_t enumerated = 0;
};

/// Enumerates every m-subset of the rows of `cov` for the largest entropy.
inline SubsetResult best_subset_entropy(const Eigen::MatrixXd& cov, std::size_t m) {
  const std::size_t n = static_cast<std::size_t>(cov.rows());
  if (m == 0 || m > n) throw ArgumentError("subset size out of range");
  SubsetResult r;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(m), true);
  do {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) idx.push_back(i);
    }
    const double h = gaussian_entropy(submatrix(cov, idx));
    ++r.enumerated;
    if (h > r.best_entropy) {
      r.best_entropy = h;
      r.best = idx;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return r;
}

/// Conditional variance of latent f(x) given noisy observations at `given`,
/// from a ratio of determinants of joint covariance blocks.
/// `latent` is the latent covariance and `noise` the observation noise.
inline double conditional_variance_by_determinants(const Eigen::MatrixXd& latent,
                                                   const std::vector<double>& noise,
                                                   std::size_t x,
                                                   const std::vector<std::size_t>& given) {
  const std::size_t g = given.size();
  Eigen::MatrixXd J(g + 1, g + 1);
  J(0, 0) = latent(x, x);
  for (std::size_t a = 0; a < g; ++a) {
    J(0, a + 1) = J(a + 1, 0) = latent(x, given[a]);
    for (std::size_t b = 0; b < g; ++b) J(a + 1, b + 1) = latent(given[a], given[b]);
    J(a + 1, a + 1) += noise[given[a]];
  }
  const Eigen::MatrixXd Y = J.bottomRightCorner(g, g);
  return std::exp(log_det_spd(J) - log_det_spd(Y));
}

/// Mutual-information gain of adding x to `visited` within the set of n
/// points: 0.5 log of the ratio of conditional variances given the visited
/// set and given every other unvisited point.
inline double mi_gain(const Eigen::MatrixXd& latent, const std::vector<double>& noise,
                      std::size_t x, const std::vector<std::size_t>& visited) {
  const std::size_t n = static_cast<std::size_t>(latent.rows());
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != x && std::find(visited.begin(), visited.end(), i) == visited.end()) {
      rest.push_back(i);
    }
  }
  const double num = conditional_variance_by_determinants(latent, noise, x, visited);
  const double den = conditional_variance_by_determinants(latent, noise, x, rest);
  return 0.5 * std::log(num / den);
}

/// Turbulent-intensity estimator written out directly.
inline double intensity_direct(const std::vector<double>& u, const std::vector<double>& v,
                               double noise_u, double noise_v, double q_ref) {
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    mu += u[k];
    mv += v[k];
  }
  mu /= n;
  mv /= n;
  double su = 0.0, sv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    su += (u[k] - mu) * (u[k] - mu);
    sv += (v[k] - mv) * (v[k] - mv);
  }
  su /= n - 1.0;
  sv /= n - 1.0;
  const double var_w = 0.5 * ((su - noise_u) + (sv - noise_v));
  const double k = (su - noise_u) + (sv - noise_v) + var_w;
  return std::sqrt(std::max(0.0, k) / 3.0) / q_ref;
}

struct BootstrapCheck {
  double mean_bootstrap_variance = 0.0;  // average of the per-replicate estimates
  double empirical_variance = 0.0;       // spread of the estimator across replicates
};

/// Nested Monte Carlo: regenerate `replicates` independent series of n
/// Gaussian samples, and compare the spread of the intensity estimate with
/// the average bootstrap variance supplied by `bootstrap`.
inline BootstrapCheck nested_bootstrap(
    std::size_t replicates, std::size_t n, double sigma_u, double sigma_v, double q_ref,
    std::uint64_t seed,
    const std::function<double(const std::vector<double>&, const std::vector<double>&,
                               std::uint64_t)>& bootstrap) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> est, boot;
  std::vector<double> u(n), v(n);
  for (std::size_t r = 0; r < replicates; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      u[k] = 0.3 + sigma_u * z(rng);
      v[k] = -0.1 + sigma_v * z(rng);
    }
    est.push_back(intensity_direct(u, v, 0.0, 0.0, q_ref));
    boot.push_back(bootstrap(u, v, rng()));
  }
  BootstrapCheck c;
  double m = 0.0;
  for (double e : est) m += e;
  m /= static_cast<double>(replicates);
  for (double e : est) c.empirical_variance += (e - m) * (e - m);
  c.empirical_variance /= static_cast<double>(replicates - 1);
  for (double b : boot) c.mean_bootstrap_variance += b;
  c.mean_bootstrap_variance /= static_cast<double>(replicates);
  return c;
}

}  // namespace flowlearn::oracle

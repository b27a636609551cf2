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

// Greedy next-measurement selection over a discrete candidate set.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flowlearn/ensemble.hpp"
#include "flowlearn/error.hpp"
#include "flowlearn/geometry.hpp"

namespace flowlearn {

enum class PlannerMetric { kEntropy, kMutualInformation, kLattice };

inline PlannerMetric parse_metric(const std::string& s) {
  if (s == "entropy") return PlannerMetric::kEntropy;
  if (s == "mi" || s == "mutual_information") return PlannerMetric::kMutualInformation;
  if (s == "lattice") return PlannerMetric::kLattice;
  throw ArgumentError("unknown planning metric '" + s + "'");
}

inline const char* metric_name(PlannerMetric m) {
  switch (m) {
    case PlannerMetric::kEntropy: return "entropy";
    case PlannerMetric::kMutualInformation: return "mi";
    case PlannerMetric::kLattice: return "lattice";
  }
  return "?";
}

/// Expected entropy gain up to a monotone transform: the model-weighted
/// product of posterior u and v variances at every grid point.
inline std::vector<double> entropy_gains(const ModelEnsemble& e, GaussianField::GridId grid,
                                         std::span<const double> weights) {
  if (weights.size() != e.size()) throw ArgumentError("one weight per model required");
  const std::size_t G = e.field(0, FieldKind::kU).grid_points(grid).size();
  std::vector<double> gain(G, 0.0);
  for (std::size_t j = 0; j < e.size(); ++j) {
    if (weights[j] == 0.0) continue;
    const auto& vu = e.field(j, FieldKind::kU).grid_variance(grid);
    const auto& vv = e.field(j, FieldKind::kV).grid_variance(grid);
    for (std::size_t g = 0; g < G; ++g) gain[g] += weights[j] * vu[g] * vv[g];
  }
  return gain;
}

/// Mutual-information gain over the candidate set: ratio of the posterior
/// variance given the visited set to the variance given every other
/// unvisited candidate. Noise at unvisited candidates is predicted from the
/// prior intensity. Each model keeps the inverse covariance of the
/// unvisited set, shrunk by a rank-one update as candidates get visited.
class MutualInformationPlanner {
 public:
  MutualInformationPlanner(const ModelEnsemble& e, GaussianField::GridId grid,
                           std::vector<double> weights)
      : weights_(std::move(weights)), grid_(grid) {
    if (weights_.size() != e.size()) throw ArgumentError("one weight per model required");
    const auto& sites = e.field(0, FieldKind::kU).grid_sites(grid);
    const std::size_t G = sites.size();
    active_.assign(G, true);
    for (std::size_t j = 0; j < e.size(); ++j) {
      ModelState st;
      if (weights_[j] > 0.0) {
        const CompactKernel& k = e.field(j, FieldKind::kU).kernel();
        const auto& s = e.field(j, FieldKind::kU).grid_sites(grid);
        Eigen::MatrixXd K(G, G);
        st.noise.resize(G);
        for (std::size_t a = 0; a < G; ++a) {
          st.noise[a] = k.predicted_noise(s[a]);
          K(a, a) = k.variance(s[a]) + st.noise[a];
          for (std::size_t b = a + 1; b < G; ++b) K(a, b) = K(b, a) = k(s[a], s[b]);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() != Eigen::Success) {
          throw IllConditionedError("candidate covariance is not positive definite", 0, G - 1);
        }
        st.P = llt.solve(Eigen::MatrixXd::Identity(G, G));
      }
      models_.push_back(std::move(st));
    }
  }

  /// Removes a candidate from the unvisited set.
  void mark_visited(std::size_t r) {
    if (r >= active_.size()) throw ArgumentError("candidate index out of range");
    if (!active_[r]) return;
    active_[r] = false;
    for (ModelState& st : models_) {
      if (st.P.size() == 0) continue;
      const double prr = st.P(r, r);
      const Eigen::VectorXd col = st.P.col(r);
      st.P.noalias() -= (col * col.transpose()) / prr;
      st.P.row(r).setZero();
      st.P.col(r).setZero();
    }
  }

  /// Gains at every candidate; NaN where the candidate is visited or the
  /// conditional variance given the unvisited set vanishes.
  std::vector<double> gains(const ModelEnsemble& e) const {
    const std::size_t G = active_.size();
    std::vector<double> out(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
      if (!active_[g]) out[g] = std::numeric_limits<double>::quiet_NaN();
    }
    for (std::size_t j = 0; j < models_.size(); ++j) {
      const ModelState& st = models_[j];
      if (st.P.size() == 0) continue;
      const auto& vu = e.field(j, FieldKind::kU).grid_variance(grid_);
      const auto& vv = e.field(j, FieldKind::kV).grid_variance(grid_);
      const auto& prior = e.field(j, FieldKind::kU).grid_prior_variance(grid_);
      for (std::size_t g = 0; g < G; ++g) {
        if (std::isnan(out[g])) continue;
        const double den = 1.0 / st.P(g, g) - st.noise[g];
        if (!(den > 1e-12 * prior[g])) {
          out[g] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        out[g] += weights_[j] * (vu[g] / den) * (vv[g] / den);
      }
    }
    return out;
  }

  /// Conditional variance of candidate g given every other unvisited one.
  double complement_variance(std::size_t model, std::size_t g) const {
    const ModelState& st = models_.at(model);
    return 1.0 / st.P(g, g) - st.noise[g];
  }

 private:
  struct ModelState {
    Eigen::MatrixXd P;
    std::vector<double> noise;
  };
  std::vector<double> weights_;
  GaussianField::GridId grid_;
  std::vector<bool> active_;
  std::vector<ModelState> models_;
};

struct WaypointChoice {
  std::size_t index = 0;
  double gain = 0.0;
  double travel = 0.0;
  bool relaxed = false;  // travel limit had to be doubled
};

/// Feasible argmax of `gains`. Ties go to the shorter travel, then to the
/// lower index. A non-positive or infinite max_travel disables the limit.
inline WaypointChoice select_waypoint(std::span<const double> gains,
                                      std::span<const double> travel,
                                      const std::vector<bool>& visited, double max_travel) {
  if (gains.size() != travel.size() || gains.size() != visited.size()) {
    throw ArgumentError("gain, travel and visited sizes differ");
  }
  const bool limited = max_travel > 0.0 && std::isfinite(max_travel);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double limit = limited ? max_travel * (attempt == 0 ? 1.0 : 2.0)
                                 : std::numeric_limits<double>::infinity();
    bool found = false;
    WaypointChoice best;
    for (std::size_t c = 0; c < gains.size(); ++c) {
      if (visited[c] || std::isnan(gains[c]) || !std::isfinite(travel[c])) continue;
      if (travel[c] > limit) continue;
      const bool better =
          !found || gains[c] > best.gain ||
          (gains[c] == best.gain && (travel[c] < best.travel ||
                                     (travel[c] == best.travel && c < best.index)));
      if (better) {
        found = true;
        best = {c, gains[c], travel[c], attempt == 1};
      }
    }
    if (found) return best;
    if (!limited) break;
  }
  throw IsolatedRobotError("no reachable unvisited candidate within twice the travel limit");
}

/// Uniform nx-by-ny lattice over the box, inset by `margin`.
inline std::vector<Point2> lattice_points(const Domain2D& d, int nx, int ny, double margin) {
  if (nx < 2 || ny < 2) throw ArgumentError("lattice needs at least 2x2 points");
  if (margin < 0.0 || 2.0 * margin >= std::min(d.width(), d.height())) {
    throw ArgumentError("lattice margin leaves no room");
  }
  const double sx = (d.width() - 2.0 * margin) / (nx - 1);
  const double sy = (d.height() - 2.0 * margin) / (ny - 1);
  std::vector<Point2> out;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int ii = j % 2 == 0 ? i : nx - 1 - i;
      out.push_back({margin + ii * sx, margin + j * sy});
    }
  }
  return out;
}

struct LatticePlan {
  std::vector<Point2> points;
  std::vector<std::size_t> candidate_index;  // npos when not snapped
  std::size_t snapped = 0;
};

/// Boustrophedon lattice. Points that are not free (or every point, with
/// snap_all) move to the nearest candidate not used yet.
inline LatticePlan lattice_plan(const Domain2D& d, std::span<const Point2> candidates, int nx,
                                int ny, double margin, bool snap_all = false) {
  LatticePlan plan;
  std::vector<bool> used(candidates.size(), false);
  for (Point2 p : lattice_points(d, nx, ny, margin)) {
    if (!snap_all && d.is_free(p)) {
      plan.points.push_back(p);
      plan.candidate_index.push_back(static_cast<std::size_t>(-1));
      continue;
    }
    std::size_t best = candidates.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      const double dd = squared_distance(candidates[c], p);
      if (dd < best_d) {
        best_d = dd;
        best = c;
      }
    }
    if (best == candidates.size()) throw ArgumentError("no candidate left to snap a lattice point");
    used[best] = true;
    plan.points.push_back(candidates[best]);
    plan.candidate_index.push_back(best);
    if (!d.is_free(p) || best_d > 0.0) ++plan.snapped;
  }
  return plan;
}

}  // namespace flowlearn

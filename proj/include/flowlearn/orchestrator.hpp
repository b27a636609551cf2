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

// The integrated learning loop: measure, update the model ensemble,
// condition the fields, check convergence and plan the next waypoint.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowlearn/acquisition.hpp"
#include "flowlearn/ensemble.hpp"
#include "flowlearn/error.hpp"
#include "flowlearn/flowsim.hpp"
#include "flowlearn/geometry.hpp"
#include "flowlearn/planner.hpp"
#include "flowlearn/prior_draw.hpp"
#include "flowlearn/random.hpp"
#include "flowlearn/rig.hpp"
#include "flowlearn/srom.hpp"

namespace flowlearn {

struct ModelSpec {
  std::string name;
  Corruption corruption;
  double sigma_u0 = 0.1;
  double sigma_i0 = 0.05;
};

/// Twelve corrupted variants of the room flow. Entry 6 is the closest one.
inline std::vector<ModelSpec> default_model_specs() {
  auto spec = [](std::string name, double amp, double rot_deg, Point2 shift, double iscale,
                 double ioff, double su, double si) {
    Corruption c;
    c.amplitude = amp;
    c.rotation = rot_deg * kDegree;
    c.shift = shift;
    c.intensity_scale = iscale;
    c.intensity_offset = ioff;
    return ModelSpec{std::move(name), c, su, si};
  };
  return {
      spec("k-epsilon", 0.55, 35.0, {0.25, -0.18}, 0.40, 0.0, 0.10, 0.05),
      spec("rsm", 1.40, -25.0, {-0.22, 0.10}, 1.70, 0.0, 0.20, 0.10),
      spec("k-omega", 0.45, 48.0, {0.18, 0.28}, 0.35, 0.0, 0.20, 0.10),
      spec("k-epsilon-profile", 0.65, 22.0, {0.09, -0.28}, 0.50, 0.0, 0.14, 0.07),
      spec("rsm-profile", 1.30, -18.0, {-0.18, -0.14}, 1.45, 0.0, 0.20, 0.10),
      spec("k-omega-profile", 0.50, 42.0, {0.30, 0.00}, 0.40, 0.0, 0.20, 0.10),
      spec("rsm-profile-i05", 0.86, 8.0, {0.06, -0.04}, 0.78, 0.0, 0.14, 0.07),
      spec("rsm-profile-i03", 0.72, 16.0, {0.14, 0.12}, 0.58, 0.0, 0.20, 0.10),
      spec("rsm-profile-i01", 0.62, 26.0, {-0.10, 0.21}, 0.30, 0.0, 0.20, 0.10),
      spec("rsm-profile-i04", 1.15, 12.0, {0.21, -0.09}, 1.10, 0.01, 0.20, 0.10),
      spec("rsm-qin076", 0.58, 32.0, {-0.25, -0.18}, 0.62, 0.0, 0.20, 0.10),
      spec("rsm-qin080", 0.78, -14.0, {0.25, 0.18}, 0.66, 0.0, 0.14, 0.07),
  };
}

struct RunConfig {
  // Domain and ground truth.
  double width = 2.2;
  double height = 2.2;
  std::vector<Rect> obstacles = {{0.9, 0.85, 1.3, 1.25}};
  PresetParams truth;
  std::vector<ModelSpec> models = default_model_specs();
  std::vector<double> model_prior;  // empty: uniform
  std::optional<std::size_t> truth_from_model;  // replace the truth by one model
  bool truth_prior_draw = false;  // add a draw from that model's prior

  // Sensing.
  RigConfig rig;
  AcquisitionOptions acquisition;
  std::size_t srom_size = 5;

  // Fields.
  double ell = 0.35;
  double n0 = 200.0;

  // Planning.
  double candidate_spacing = 0.055;
  double candidate_clearance = 0.1;
  int exploration_nx = 3;
  int exploration_ny = 3;
  double exploration_margin = 0.35;
  std::size_t max_measurements = 120;
  double tol = 2e-4;
  double max_travel = 1.0;  // m; <= 0 disables the limit
  PlannerMetric metric = PlannerMetric::kEntropy;
  int lattice_nx = 9;  // lattice metric only
  int lattice_ny = 9;
  double lattice_margin = 0.15;

  // Evaluation.
  std::size_t test_points = 100;
  bool noisy_test_measurements = true;
  bool track_error = true;  // e_k against the truth after every step

  std::uint64_t seed = 1;

  std::size_t exploration_count() const {
    return static_cast<std::size_t>(exploration_nx * exploration_ny);
  }

  void validate() const {
    if (!(width > 0.0 && height > 0.0)) throw ArgumentError("domain size must be positive");
    if (models.empty()) throw ArgumentError("at least one model is required");
    if (metric != PlannerMetric::kLattice && exploration_count() > max_measurements) {
      throw ArgumentError("exploration count m_bar = " + std::to_string(exploration_count()) +
                          " exceeds max_measurements m = " + std::to_string(max_measurements));
    }
    if (!(tol > 0.0)) throw ArgumentError("tol must be positive");
    if (acquisition.location_std < 0.0 || acquisition.heading_std < 0.0 ||
        rig.full_scale_error < 0.0) {
      throw ArgumentError("noise standard deviations must be >= 0");
    }
    if (!(ell > 0.0)) throw ArgumentError("ell must be positive");
    if (!(n0 >= 1.0)) throw ArgumentError("n0 must be >= 1");
    if (srom_size != 1 && srom_size != 5 && srom_size != 9) {
      throw ArgumentError("srom_size must be 1, 5 or 9");
    }
    if (!(candidate_spacing > 0.0)) throw ArgumentError("candidate spacing must be positive");
    if (truth_from_model && *truth_from_model >= models.size()) {
      throw ArgumentError("truth_from_model index out of range");
    }
    if (truth_prior_draw && !truth_from_model) {
      throw ArgumentError("truth_prior_draw needs truth_from_model");
    }
    if (exploration_nx < 2 || exploration_ny < 2) {
      throw ArgumentError("exploration lattice must be at least 2x2");
    }
    if (metric == PlannerMetric::kLattice && (lattice_nx < 2 || lattice_ny < 2)) {
      throw ArgumentError("lattice must be at least 2x2");
    }
    rig.validate();
  }
};

// ---------------------------------------------------------------------------
// Evaluation helpers.

/// Posterior means of every model and field on a grid.
struct FieldSnapshot {
  std::vector<std::array<std::vector<double>, 3>> mean;  // [model][field][point]
};

inline FieldSnapshot snapshot(const ModelEnsemble& e, GaussianField::GridId grid) {
  FieldSnapshot s;
  for (std::size_t j = 0; j < e.size(); ++j) {
    std::array<std::vector<double>, 3> m;
    for (FieldKind f : kAllFields) m[static_cast<int>(f)] = e.field(j, f).grid_mean(grid);
    s.mean.push_back(std::move(m));
  }
  return s;
}

/// Probability-weighted mean absolute change of the posterior means, summed
/// over u, v and i. Every grid point carries equal cell weight.
inline double convergence_delta(const FieldSnapshot& prev, const FieldSnapshot& cur,
                                std::span<const double> p) {
  if (prev.mean.size() != cur.mean.size() || p.size() != cur.mean.size()) {
    throw ArgumentError("snapshot model counts differ");
  }
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    double dj = 0.0;
    for (int f = 0; f < 3; ++f) {
      const auto& a = prev.mean[j][f];
      const auto& b = cur.mean[j][f];
      if (a.size() != b.size() || a.empty()) throw ArgumentError("snapshot grids differ");
      double s = 0.0;
      for (std::size_t g = 0; g < a.size(); ++g) s += std::abs(b[g] - a[g]);
      dj += s / static_cast<double>(a.size());
    }
    d += p[j] * dj;
  }
  return d;
}

struct PredictionError {
  double u = 0.0;
  double v = 0.0;
  double i = 0.0;
  double mean() const { return (u + v + i) / 3.0; }
};

/// Mean absolute error of predicted means against reference values.
inline PredictionError evaluate_prediction(std::span<const double> mu_u,
                                           std::span<const double> mu_v,
                                           std::span<const double> mu_i,
                                           std::span<const FlowState> reference) {
  const std::size_t n = reference.size();
  if (n == 0 || mu_u.size() != n || mu_v.size() != n || mu_i.size() != n) {
    throw ArgumentError("prediction and reference sizes differ");
  }
  PredictionError e;
  for (std::size_t l = 0; l < n; ++l) {
    e.u += std::abs(mu_u[l] - reference[l].u);
    e.v += std::abs(mu_v[l] - reference[l].v);
    e.i += std::abs(mu_i[l] - reference[l].intensity);
  }
  e.u /= static_cast<double>(n);
  e.v /= static_cast<double>(n);
  e.i /= static_cast<double>(n);
  return e;
}

struct Coverage {
  double u = 0.0;
  double v = 0.0;
  double i = 0.0;
};

/// Fraction of measured values within one predictive std of the predicted
/// mean. The std combines the field variance and `noise` (per point, per
/// field); pass zeros for the field-only bound.
inline Coverage uncertainty_calibration(std::span<const Moments> u, std::span<const Moments> v,
                                        std::span<const Moments> i,
                                        std::span<const FlowState> measured,
                                        std::span<const std::array<double, 3>> noise) {
  const std::size_t n = measured.size();
  if (n == 0 || u.size() != n || v.size() != n || i.size() != n || noise.size() != n) {
    throw ArgumentError("calibration sizes differ");
  }
  Coverage c;
  for (std::size_t l = 0; l < n; ++l) {
    auto inside = [](double y, const Moments& m, double nv) {
      return std::abs(y - m.mean) <= std::sqrt(std::max(0.0, m.variance + nv));
    };
    c.u += inside(measured[l].u, u[l], noise[l][0]);
    c.v += inside(measured[l].v, v[l], noise[l][1]);
    c.i += inside(measured[l].intensity, i[l], noise[l][2]);
  }
  c.u /= static_cast<double>(n);
  c.v /= static_cast<double>(n);
  c.i /= static_cast<double>(n);
  return c;
}

// ---------------------------------------------------------------------------
// Run log.

struct StepLog {
  std::size_t k = 0;                  // measurements absorbed so far
  std::vector<std::size_t> measured;  // indices into RunLog::measurements
  double gain = 0.0;                  // planning gain of the chosen point
  double travel = 0.0;                // geodesic distance travelled (m)
  bool relaxed = false;
  double d = 0.0;                     // convergence delta
  std::vector<double> p;              // model probabilities after the step
  std::vector<double> log_likelihood;
  bool underflow = false;
  std::optional<PredictionError> error;  // against the truth at test points
};

struct RunLog {
  static constexpr int kVersion = 1;
  RunConfig config;
  std::vector<Point2> candidates;
  std::vector<Point2> test_points;
  std::vector<MeasurementRecord> measurements;
  std::vector<StepLog> steps;
  bool converged = false;

  // Final posterior mixture on the candidate grid.
  std::array<std::vector<Moments>, 3> posterior;

  // Evaluation at test points.
  PredictionError e0;                      // prior mixture, initial weights
  std::vector<PredictionError> e0_models;  // each prior model alone
  std::size_t best_model = 0;              // most probable at the end
  PredictionError e0_best;                 // prior error of best_model
  PredictionError e_final;
  std::optional<PredictionError> e0_measured;     // against noisy test data
  std::optional<PredictionError> e_final_measured;
  std::optional<Coverage> coverage;               // field std plus noise
  std::optional<Coverage> coverage_field_only;
};

// ---------------------------------------------------------------------------

struct Experiment {
  Domain2D domain;
  FlowGroundTruth truth;
  std::vector<PriorModel> models;
};

inline Domain2D make_domain(const RunConfig& c) {
  return Domain2D(c.width, c.height, c.obstacles,
                  {{"inlet", {c.width - 0.5, 0.0}, {c.width - 0.1, 0.0}},
                   {"outlet", {0.1, 0.0}, {0.5, 0.0}}});
}

/// Prior models depend only on the configuration, never on the seed. So does
/// the truth, unless it is a prior draw around one of the models.
inline Experiment build_experiment(const RunConfig& c) {
  constexpr std::uint64_t kTruthDrawStream = 14;
  Domain2D domain = make_domain(c);
  PresetParams tp = c.truth;
  tp.q_ref = tp.q_ref > 0.0 ? tp.q_ref : 0.78;
  FlowGroundTruth base = make_preset(domain, tp);
  std::vector<PriorModel> models;
  for (const ModelSpec& s : c.models) {
    models.push_back({s.name, corrupt(base, s.corruption), s.sigma_u0, s.sigma_i0, s.corruption});
  }
  if (c.truth_from_model) {
    const FlowFieldFn f = models[*c.truth_from_model].field;
    const double ts = tp.t_star;
    const double spread = tp.t_star_variation;
    FlowFieldFn g = f;
    if (c.truth_prior_draw) {
      const ModelSpec& s = c.models[*c.truth_from_model];
      ScalarFieldFn mu_i = [f](Point2 x) { return std::max(0.0, f(x).intensity); };
      const CompactKernel ku({s.sigma_u0, c.ell, c.n0, tp.q_ref}, mu_i);
      const CompactKernel ki({s.sigma_i0, c.ell, c.n0, tp.q_ref});
      const double h = c.ell / 8.0;
      auto draw = [&](const CompactKernel& k, std::uint64_t tag) {
        return std::make_shared<LatticeDraw>(k, domain.width(), domain.height(), h,
                                             derive_seed(c.seed, {kTruthDrawStream, tag}));
      };
      auto du = draw(ku, 0), dv = draw(ku, 1), di = draw(ki, 2);
      g = [f, du, dv, di](Point2 x) {
        FlowState st = f(x);
        st.u += (*du)(x);
        st.v += (*dv)(x);
        st.intensity = std::max(0.0, st.intensity + (*di)(x));
        return st;
      };
    }
    base = FlowGroundTruth(domain, tp.q_ref, g, detail::timescale_field(domain, ts, spread));
  }
  return {domain, std::move(base), std::move(models)};
}

/// Random free points with at least `clearance` to walls and obstacles.
inline std::vector<Point2> random_test_points(const Domain2D& d, std::size_t n,
                                              double clearance, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(0.0, d.width());
  std::uniform_real_distribution<double> uy(0.0, d.height());
  std::vector<Point2> out;
  std::size_t guard = 0;
  while (out.size() < n) {
    if (++guard > 1000 * (n + 1)) throw ArgumentError("cannot place test points");
    const Point2 p{ux(rng), uy(rng)};
    if (d.is_free(p) && d.clearance(p) >= clearance) out.push_back(p);
  }
  return out;
}

namespace detail {

enum StreamTag : std::uint64_t {
  kStreamMeasurement = 11,
  kStreamTestPoints = 12,
  kStreamTestMeasurement = 13,
};

inline PredictionError grid_error(const ModelEnsemble& e, GaussianField::GridId grid,
                                  std::span<const double> w,
                                  std::span<const FlowState> reference, bool prior) {
  std::array<std::vector<double>, 3> mu;
  for (FieldKind f : kAllFields) {
    const std::vector<Moments> m = prior ? e.prior_mixture(grid, f, w) : e.mixture(grid, f, w);
    for (const Moments& x : m) mu[static_cast<int>(f)].push_back(x.mean);
  }
  return evaluate_prediction(mu[0], mu[1], mu[2], reference);
}

}  // namespace detail

/// Runs the full measure-learn-plan loop.
inline RunLog run_experiment(const RunConfig& cfg) {
  cfg.validate();
  Experiment ex = build_experiment(cfg);
  RunLog log;
  log.config = cfg;

  log.candidates = free_grid(ex.domain, cfg.candidate_spacing, cfg.candidate_clearance);
  if (log.candidates.size() < cfg.exploration_count()) {
    throw ArgumentError("candidate set smaller than the exploration lattice");
  }
  log.test_points = random_test_points(ex.domain, cfg.test_points, cfg.candidate_clearance,
                                       derive_seed(cfg.seed, {detail::kStreamTestPoints}));

  ModelEnsemble ens(ex.models, {cfg.ell, cfg.n0, ex.truth.q_ref()}, cfg.model_prior);
  const auto cand_grid = ens.attach_grid(log.candidates);
  const auto test_grid = ens.attach_grid(log.test_points);
  const std::vector<double> p0 = ens.probabilities();

  std::vector<FlowState> test_truth;
  for (Point2 x : log.test_points) test_truth.push_back(ex.truth.field_query(x));

  std::vector<bool> visited(log.candidates.size(), false);
  GeodesicMap geo(ex.domain);
  std::optional<MutualInformationPlanner> mi;
  if (cfg.metric == PlannerMetric::kMutualInformation) mi.emplace(ens, cand_grid, p0);

  FieldSnapshot prev = snapshot(ens, cand_grid);
  std::size_t step_counter = 0;

  auto measure = [&](Point2 x) -> const MeasurementRecord& {
    const std::uint64_t s =
        derive_seed(cfg.seed, {detail::kStreamMeasurement, log.measurements.size()});
    try {
      log.measurements.push_back(
          acquire_measurement(ex.truth, cfg.rig, x, 0.0, cfg.acquisition, s).record);
    } catch (const Error& err) {
      throw Error("measurement " + std::to_string(log.measurements.size()) + " at " +
                  to_string(x) + ": " + err.what());
    }
    return log.measurements.back();
  };

  auto absorb = [&](std::span<const std::size_t> idx, StepLog& st) {
    std::vector<MeasurementRecord> batch;
    std::vector<LocationSrom> sroms;
    for (std::size_t m : idx) {
      batch.push_back(log.measurements[m]);
      sroms.push_back(make_location_srom(log.measurements[m].x, cfg.acquisition.location_std,
                                         cfg.srom_size));
    }
    try {
      ModelEnsemble::AbsorbResult r = ens.absorb(batch, sroms);
      st.log_likelihood = std::move(r.log_likelihood);
      st.underflow = r.underflow;
    } catch (const Error& err) {
      throw Error("step " + std::to_string(step_counter) + ": " + err.what());
    }
    st.k = log.measurements.size();
    st.measured.assign(idx.begin(), idx.end());
    st.p = ens.probabilities();
    FieldSnapshot cur = snapshot(ens, cand_grid);
    st.d = convergence_delta(prev, cur, st.p);
    prev = std::move(cur);
    if (cfg.track_error) {
      st.error = detail::grid_error(ens, test_grid, ens.probabilities(), test_truth, false);
    }
    ++step_counter;
  };

  Point2 position;
  if (cfg.metric == PlannerMetric::kLattice) {
    const LatticePlan plan = lattice_plan(ex.domain, log.candidates, cfg.lattice_nx,
                                          cfg.lattice_ny, cfg.lattice_margin, true);
    std::vector<std::size_t> idx;
    for (std::size_t q = 0; q < plan.points.size(); ++q) {
      visited[plan.candidate_index[q]] = true;
      measure(plan.points[q]);
      idx.push_back(log.measurements.size() - 1);
    }
    StepLog st;
    absorb(idx, st);
    log.steps.push_back(std::move(st));
  } else {
    const LatticePlan plan = lattice_plan(ex.domain, log.candidates, cfg.exploration_nx,
                                          cfg.exploration_ny, cfg.exploration_margin, true);
    std::vector<std::size_t> idx;
    for (std::size_t q = 0; q < plan.points.size(); ++q) {
      const std::size_t c = plan.candidate_index[q];
      visited[c] = true;
      if (mi) mi->mark_visited(c);
      measure(plan.points[q]);
      idx.push_back(log.measurements.size() - 1);
      position = plan.points[q];
    }
    StepLog st;
    absorb(idx, st);
    log.converged = st.d <= cfg.tol;
    log.steps.push_back(std::move(st));

    while (!log.converged && log.measurements.size() < cfg.max_measurements) {
      std::vector<double> gains = cfg.metric == PlannerMetric::kEntropy
                                      ? entropy_gains(ens, cand_grid, ens.probabilities())
                                      : mi->gains(ens);
      std::vector<double> travel;
      if (cfg.max_travel > 0.0 && std::isfinite(cfg.max_travel)) {
        travel = geo.distances(position, log.candidates);
      } else {
        travel.resize(log.candidates.size());
        for (std::size_t c = 0; c < travel.size(); ++c) {
          travel[c] = distance(position, log.candidates[c]);
        }
      }
      const WaypointChoice w = select_waypoint(gains, travel, visited, cfg.max_travel);
      visited[w.index] = true;
      if (mi) mi->mark_visited(w.index);
      position = log.candidates[w.index];
      measure(position);
      StepLog s;
      s.gain = w.gain;
      s.travel = w.travel;
      s.relaxed = w.relaxed;
      const std::size_t last = log.measurements.size() - 1;
      absorb(std::span<const std::size_t>(&last, 1), s);
      log.converged = s.d <= cfg.tol;
      log.steps.push_back(std::move(s));
    }
  }

  for (FieldKind f : kAllFields) log.posterior[static_cast<int>(f)] = ens.mixture(cand_grid, f);

  // Evaluation at the test points.
  const std::vector<double>& pf = ens.probabilities();
  log.best_model = static_cast<std::size_t>(std::max_element(pf.begin(), pf.end()) - pf.begin());
  log.e0 = detail::grid_error(ens, test_grid, p0, test_truth, true);
  for (std::size_t j = 0; j < ens.size(); ++j) {
    std::vector<double> w(ens.size(), 0.0);
    w[j] = 1.0;
    log.e0_models.push_back(detail::grid_error(ens, test_grid, w, test_truth, true));
  }
  log.e0_best = log.e0_models[log.best_model];
  log.e_final = detail::grid_error(ens, test_grid, pf, test_truth, false);

  if (cfg.noisy_test_measurements) {
    std::vector<FlowState> measured;
    std::vector<std::array<double, 3>> noise;
    for (std::size_t l = 0; l < log.test_points.size(); ++l) {
      const std::uint64_t s = derive_seed(cfg.seed, {detail::kStreamTestMeasurement, l});
      const MeasurementRecord r =
          acquire_measurement(ex.truth, cfg.rig, log.test_points[l], 0.0, cfg.acquisition, s)
              .record;
      measured.push_back({r.y_u, r.y_v, r.y_i});
      noise.push_back({r.sigma2_u, r.sigma2_v, r.sigma2_i});
    }
    log.e0_measured = detail::grid_error(ens, test_grid, p0, measured, true);
    log.e_final_measured = detail::grid_error(ens, test_grid, pf, measured, false);
    std::array<std::vector<Moments>, 3> mix;
    for (FieldKind f : kAllFields) mix[static_cast<int>(f)] = ens.mixture(test_grid, f);
    log.coverage = uncertainty_calibration(mix[0], mix[1], mix[2], measured, noise);
    const std::vector<std::array<double, 3>> zero(measured.size(), {0.0, 0.0, 0.0});
    log.coverage_field_only = uncertainty_calibration(mix[0], mix[1], mix[2], measured, zero);
  }
  return log;
}

}  // namespace flowlearn

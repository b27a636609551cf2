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

// Bayesian selection over a discrete set of prior flow models. Every model
// carries three independent fields (u, v, intensity).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "flowlearn/error.hpp"
#include "flowlearn/flowsim.hpp"
#include "flowlearn/gaussian_field.hpp"
#include "flowlearn/mixture.hpp"
#include "flowlearn/sigproc.hpp"
#include "flowlearn/srom.hpp"

namespace flowlearn {

enum class FieldKind { kU = 0, kV = 1, kI = 2 };
inline constexpr std::array<FieldKind, 3> kAllFields = {FieldKind::kU, FieldKind::kV,
                                                       FieldKind::kI};

inline const char* field_name(FieldKind f) {
  switch (f) {
    case FieldKind::kU: return "u";
    case FieldKind::kV: return "v";
    case FieldKind::kI: return "i";
  }
  return "?";
}

/// A candidate description of the flow, e.g. one numerical solution.
struct PriorModel {
  std::string name;
  FlowFieldFn field;
  double sigma_u0 = 0.1;  // also used for v
  double sigma_i0 = 0.05;
  Corruption corruption;  // how the model was derived; descriptive

  void validate() const {
    if (!field) throw ArgumentError("model '" + name + "' has no field");
    if (!(sigma_u0 >= 0.0) || !(sigma_i0 >= 0.0)) {
      throw ArgumentError("model '" + name + "' has negative confidence std");
    }
  }
};

struct EnsembleKernelSettings {
  double ell = 0.35;
  double n0 = 200.0;
  double q_ref = 0.78;
};

/// Posterior model weights from prior weights and log-likelihoods, computed
/// in log space. `underflow` is set, and the prior returned, when no model
/// keeps a finite posterior.
struct ProbabilityUpdate {
  std::vector<double> p;
  bool underflow = false;
};

inline ProbabilityUpdate update_probabilities(std::span<const double> prior,
                                              std::span<const double> log_likelihood) {
  if (prior.size() != log_likelihood.size() || prior.empty()) {
    throw ArgumentError("one log-likelihood per model is required");
  }
  const std::size_t n = prior.size();
  std::vector<double> lp(n, -std::numeric_limits<double>::infinity());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (prior[j] > 0.0 && std::isfinite(log_likelihood[j])) {
      lp[j] = std::log(prior[j]) + log_likelihood[j];
      mx = std::max(mx, lp[j]);
    }
  }
  ProbabilityUpdate out;
  if (!std::isfinite(mx)) {
    out.p.assign(prior.begin(), prior.end());
    out.underflow = true;
    return out;
  }
  out.p.resize(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.p[j] = std::isfinite(lp[j]) ? std::exp(lp[j] - mx) : 0.0;
    sum += out.p[j];
  }
  for (double& v : out.p) v /= sum;
  return out;
}

/// Observations fed to the three fields for one measurement.
struct FieldObservations {
  std::array<Observation, 3> obs;
};

class ModelEnsemble {
 public:
  ModelEnsemble(std::vector<PriorModel> models, EnsembleKernelSettings k,
                std::vector<double> prior = {})
      : models_(std::move(models)), settings_(k) {
    if (models_.empty()) throw ArgumentError("ensemble needs at least one model");
    for (const PriorModel& m : models_) m.validate();
    if (prior.empty()) prior.assign(models_.size(), 1.0 / static_cast<double>(models_.size()));
    if (prior.size() != models_.size()) throw ArgumentError("prior size mismatch");
    double sum = 0.0;
    for (double v : prior) {
      if (v < 0.0) throw ArgumentError("prior probabilities must be >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("prior probabilities must sum to one");
    p_ = std::move(prior);
    for (const PriorModel& m : models_) {
      const FlowFieldFn f = m.field;
      ScalarFieldFn mu_u = [f](Point2 x) { return f(x).u; };
      ScalarFieldFn mu_v = [f](Point2 x) { return f(x).v; };
      ScalarFieldFn mu_i = [f](Point2 x) { return std::max(0.0, f(x).intensity); };
      const KernelParams ku{m.sigma_u0, k.ell, k.n0, k.q_ref};
      const KernelParams ki{m.sigma_i0, k.ell, k.n0, k.q_ref};
      fields_.push_back({GaussianField(mu_u, CompactKernel(ku, mu_i)),
                         GaussianField(mu_v, CompactKernel(ku, mu_i)),
                         GaussianField(mu_i, CompactKernel(ki))});
    }
  }

  std::size_t size() const { return models_.size(); }
  const std::vector<PriorModel>& models() const { return models_; }
  const std::vector<double>& probabilities() const { return p_; }
  const EnsembleKernelSettings& settings() const { return settings_; }

  const GaussianField& field(std::size_t model, FieldKind f) const {
    return fields_.at(model)[static_cast<int>(f)];
  }

  /// Attaches the same point set to every field; returns the shared id.
  GaussianField::GridId attach_grid(const std::vector<Point2>& points) {
    GaussianField::GridId id = 0;
    for (auto& tri : fields_) {
      for (GaussianField& g : tri) id = g.attach_grid(points);
    }
    return id;
  }

  /// Moment-matched observations of a measurement under one model.
  FieldObservations observations_for(std::size_t model, const MeasurementRecord& r,
                                     const LocationSrom& srom) const {
    FieldObservations o;
    o.obs[0] = marginalize_location(field(model, FieldKind::kU), srom, r.y_u, r.sigma2_u);
    o.obs[1] = marginalize_location(field(model, FieldKind::kV), srom, r.y_v, r.sigma2_v);
    o.obs[2] = marginalize_location(field(model, FieldKind::kI), srom, r.y_i, r.sigma2_i);
    return o;
  }

  /// Joint log-likelihood of a batch under each model without mutating state.
  std::vector<double> log_likelihoods(std::span<const MeasurementRecord> batch,
                                      std::span<const LocationSrom> sroms) const {
    check_batch(batch, sroms);
    std::vector<double> ll(models_.size(), 0.0);
    for (std::size_t j = 0; j < models_.size(); ++j) {
      std::array<std::vector<Observation>, 3> per_field;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const FieldObservations o = observations_for(j, batch[b], sroms[b]);
        for (int f = 0; f < 3; ++f) per_field[f].push_back(o.obs[f]);
      }
      for (int f = 0; f < 3; ++f) ll[j] += fields_[j][f].log_likelihood(per_field[f]);
    }
    return ll;
  }

  struct AbsorbResult {
    std::vector<double> log_likelihood;
    bool underflow = false;
  };

  /// Conditions every field on the batch and updates the model weights. The
  /// likelihood is accumulated from one-step-ahead predictive densities.
  AbsorbResult absorb(std::span<const MeasurementRecord> batch,
                      std::span<const LocationSrom> sroms) {
    check_batch(batch, sroms);
    AbsorbResult out;
    out.log_likelihood.assign(models_.size(), 0.0);
    for (std::size_t j = 0; j < models_.size(); ++j) {
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const FieldObservations o = observations_for(j, batch[b], sroms[b]);
        for (int f = 0; f < 3; ++f) {
          out.log_likelihood[j] += fields_[j][f].append(o.obs[f]).log_density;
        }
      }
    }
    ProbabilityUpdate u = update_probabilities(p_, out.log_likelihood);
    p_ = std::move(u.p);
    out.underflow = u.underflow;
    return out;
  }

  /// Probability-weighted posterior moments on an attached grid.
  std::vector<Moments> mixture(GaussianField::GridId id, FieldKind f) const {
    return mixture(id, f, p_);
  }

  std::vector<Moments> mixture(GaussianField::GridId id, FieldKind f,
                               std::span<const double> weights) const {
    std::vector<const std::vector<double>*> means, vars;
    for (const auto& tri : fields_) {
      means.push_back(&tri[static_cast<int>(f)].grid_mean(id));
      vars.push_back(&tri[static_cast<int>(f)].grid_variance(id));
    }
    return mixture_moments(means, vars, weights);
  }

  /// Prior mixture with explicit weights (no conditioning).
  std::vector<Moments> prior_mixture(GaussianField::GridId id, FieldKind f,
                                     std::span<const double> weights) const {
    std::vector<const std::vector<double>*> means, vars;
    for (const auto& tri : fields_) {
      means.push_back(&tri[static_cast<int>(f)].grid_prior_mean(id));
      vars.push_back(&tri[static_cast<int>(f)].grid_prior_variance(id));
    }
    return mixture_moments(means, vars, weights);
  }

 private:
  void check_batch(std::span<const MeasurementRecord> batch,
                   std::span<const LocationSrom> sroms) const {
    if (batch.empty()) throw ArgumentError("empty measurement batch");
    if (batch.size() != sroms.size()) throw ArgumentError("one SROM per measurement required");
  }

  std::vector<PriorModel> models_;
  EnsembleKernelSettings settings_;
  std::vector<double> p_;
  std::vector<std::array<GaussianField, 3>> fields_;
};

}  // namespace flowlearn

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

#include <gtest/gtest.h>

#include <cmath>

#include "flowlearn/ensemble.hpp"
#include "test_util.hpp"

namespace flowlearn {
namespace {

FlowFieldFn linear_model(double a, double b, double i) {
  return [=](Point2 x) { return FlowState{a + 0.1 * x.x, b - 0.1 * x.y, i}; };
}

std::vector<PriorModel> three_models() {
  return {{"a", linear_model(0.3, 0.1, 0.06), 0.1, 0.05, {}},
          {"b", linear_model(0.4, 0.0, 0.08), 0.1, 0.05, {}},
          {"c", linear_model(0.2, 0.2, 0.04), 0.2, 0.1, {}}};
}

MeasurementRecord record_from(const FlowFieldFn& f, Point2 x, double noise, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const FlowState s = f(x);
  MeasurementRecord r;
  r.x = x;
  r.y_u = s.u + std::sqrt(noise) * z(rng);
  r.y_v = s.v + std::sqrt(noise) * z(rng);
  r.y_i = s.intensity + std::sqrt(noise) * z(rng);
  r.sigma2_u = r.sigma2_v = r.sigma2_i = noise;
  return r;
}

TEST(Probabilities, UninformativeEvidence) {
  const std::vector<double> p = {0.2, 0.5, 0.3};
  const std::vector<double> ll = {-3.0, -3.0, -3.0};
  const ProbabilityUpdate u = update_probabilities(p, ll);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(u.p[j], p[j], 1e-15);
  EXPECT_FALSE(u.underflow);
}

TEST(Probabilities, ZeroPriorStaysZero) {
  const std::vector<double> p = {0.0, 0.5, 0.5};
  const std::vector<double> ll = {100.0, -1.0, -2.0};
  const ProbabilityUpdate u = update_probabilities(p, ll);
  EXPECT_EQ(u.p[0], 0.0);
  EXPECT_NEAR(u.p[1] + u.p[2], 1.0, 1e-15);
}

TEST(Probabilities, LogSpaceHandlesHugeLikelihoods) {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<double> ll = {-1e5, -1e5 - 2.0};
  const ProbabilityUpdate u = update_probabilities(p, ll);
  EXPECT_NEAR(u.p[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-14);
}

TEST(Probabilities, UnderflowKeepsPrior) {
  const std::vector<double> p = {0.4, 0.6};
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> ll = {-inf, -inf};
  const ProbabilityUpdate u = update_probabilities(p, ll);
  EXPECT_TRUE(u.underflow);
  EXPECT_EQ(u.p, p);
}

TEST(Ensemble, UniformDefaultPrior) {
  std::vector<PriorModel> m;
  for (int j = 0; j < 12; ++j) m.push_back({"m", linear_model(0.1 * j, 0.0, 0.05), 0.1, 0.05, {}});
  const ModelEnsemble e(m, {});
  for (double p : e.probabilities()) EXPECT_DOUBLE_EQ(p, 1.0 / 12.0);
}

TEST(Ensemble, VelocityKernelsUseModelIntensity) {
  const ModelEnsemble e(three_models(), {});
  const Point2 x{0.5, 0.5};
  const double vb = e.field(1, FieldKind::kU).kernel().variance(
      e.field(1, FieldKind::kU).kernel().site(x));
  EXPECT_NEAR(vb, 0.01 + 0.78 * 0.78 * 0.08 * 0.08 / 200.0, 1e-16);
  const double vi = e.field(1, FieldKind::kI).kernel().variance(
      e.field(1, FieldKind::kI).kernel().site(x));
  EXPECT_NEAR(vi, 0.05 * 0.05, 1e-16);
}

TEST(Ensemble, SelectsGeneratingModel) {
  ModelEnsemble e(three_models(), {});
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const FlowFieldFn truth = e.models()[1].field;
  for (int k = 0; k < 20; ++k) {
    const MeasurementRecord r = record_from(truth, {u(rng), u(rng)}, 1e-4, rng);
    const LocationSrom s = make_location_srom(r.x, 0.0, 1);
    e.absorb(std::span(&r, 1), std::span(&s, 1));
    double sum = 0.0;
    for (double p : e.probabilities()) {
      EXPECT_GE(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_GT(e.probabilities()[1], 0.95);
}

TEST(Ensemble, OrderInvariance) {
  Rng rng(4);
  const FlowFieldFn truth = linear_model(0.35, 0.05, 0.07);
  std::vector<MeasurementRecord> a, b;
  std::vector<LocationSrom> sa, sb;
  for (int k = 0; k < 4; ++k) {
    a.push_back(record_from(truth, {0.2 + 0.15 * k, 0.3}, 2e-4, rng));
    b.push_back(record_from(truth, {0.25 + 0.15 * k, 0.45}, 2e-4, rng));
  }
  for (const auto& r : a) sa.push_back(make_location_srom(r.x, 0.02, 5));
  for (const auto& r : b) sb.push_back(make_location_srom(r.x, 0.02, 5));
  ModelEnsemble e1(three_models(), {});
  ModelEnsemble e2(three_models(), {});
  e1.absorb(a, sa);
  e1.absorb(b, sb);
  e2.absorb(b, sb);
  e2.absorb(a, sa);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(e1.probabilities()[j], e2.probabilities()[j], 1e-8);
}

TEST(Ensemble, JointLikelihoodMatchesAbsorbed) {
  Rng rng(5);
  const FlowFieldFn truth = linear_model(0.3, 0.12, 0.05);
  std::vector<MeasurementRecord> batch;
  std::vector<LocationSrom> sroms;
  for (int k = 0; k < 5; ++k) {
    batch.push_back(record_from(truth, {0.3 + 0.1 * k, 0.3 + 0.05 * k}, 3e-4, rng));
    sroms.push_back(make_location_srom(batch.back().x, 0.025, 5));
  }
  ModelEnsemble e(three_models(), {});
  const std::vector<double> ll = e.log_likelihoods(batch, sroms);
  const auto p_before = e.probabilities();
  EXPECT_EQ(e.probabilities(), p_before);
  const ModelEnsemble::AbsorbResult r = e.absorb(batch, sroms);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(ll[j], r.log_likelihood[j], 1e-9 * std::abs(ll[j]));
}

TEST(Ensemble, MixtureOnGrid) {
  ModelEnsemble e(three_models(), {}, {0.2, 0.3, 0.5});
  const auto g = e.attach_grid({{0.5, 0.5}, {1.0, 1.2}});
  const auto mix = e.mixture(g, FieldKind::kU);
  double mean = 0.0;
  for (int j = 0; j < 3; ++j) mean += e.probabilities()[j] * e.models()[j].field({0.5, 0.5}).u;
  EXPECT_NEAR(mix[0].mean, mean, 1e-15);
  EXPECT_THROW(ModelEnsemble(three_models(), {}, {0.5, 0.5, 0.5}), ArgumentError);
}

}  // namespace
}  // namespace flowlearn

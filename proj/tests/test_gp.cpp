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

#include <Eigen/Dense>

#include "flowlearn/gaussian_field.hpp"
#include "flowlearn/kernel.hpp"
#include "flowlearn/mixture.hpp"
#include "flowlearn/oracle.hpp"
#include "flowlearn/prior_draw.hpp"
#include "flowlearn/random.hpp"
#include "flowlearn/srom.hpp"
#include "test_util.hpp"

namespace flowlearn {
namespace {

const ScalarFieldFn kIntensity = [](Point2 x) { return 0.06 + 0.02 * x.x - 0.01 * x.y; };
const ScalarFieldFn kMean = [](Point2 x) { return 0.3 * x.x - 0.2 * x.y + 0.1; };

std::vector<Point2> random_points(std::size_t n, double size, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, size);
  std::vector<Point2> p(n);
  for (Point2& x : p) x = {u(rng), u(rng)};
  return p;
}

TEST(Kernel, HandValues) {
  KernelParams p;
  p.sigma0 = 0.1;
  const double ix = 0.07;
  EXPECT_NEAR(prior_kernel(p, {0, 0}, {0, 0}, ix, ix), 0.01 + 0.78 * 0.78 * ix * ix / 200.0,
              1e-16);
  EXPECT_EQ(prior_kernel(p, {0, 0}, {0.35, 0}, ix, ix), 0.0);
  KernelParams q;
  q.sigma0 = 2.0;
  const CompactKernel k(q);
  EXPECT_NEAR(k(Point2{0, 0}, Point2{0.175, 0}), 1.0, 1e-15);
  const CompactKernel ki(p, kIntensity);
  EXPECT_NEAR(ki(Point2{0.2, 0.3}, Point2{0.4, 0.1}),
              prior_kernel(p, {0.2, 0.3}, {0.4, 0.1}, kIntensity({0.2, 0.3}),
                           kIntensity({0.4, 0.1})),
              1e-16);
}

TEST(Kernel, FarPointsGiveDiagonal) {
  const CompactKernel k(KernelParams{}, kIntensity);
  const auto s = k.sites(std::vector<Point2>{{0.1, 0.1}, {1.0, 1.0}});
  const Eigen::MatrixXd M(assemble_covariance(k, s, CovarianceMode::kPrior));
  EXPECT_EQ(M(0, 1), 0.0);
  EXPECT_EQ(M(1, 0), 0.0);
  EXPECT_GT(M(0, 0), 0.0);
}

TEST(Kernel, PositiveSemidefiniteAndSparse) {
  Rng rng(3);
  const CompactKernel k(KernelParams{}, kIntensity);
  for (int t = 0; t < 10; ++t) {
    const auto pts = random_points(120, 2.2, rng);
    const Eigen::MatrixXd M(assemble_covariance(k, k.sites(pts), CovarianceMode::kPrior));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().maxCoeff());
  }
  const auto pts = random_points(50, 2.2, rng);
  const auto S = assemble_covariance(k, k.sites(pts), CovarianceMode::kPrior);
  EXPECT_LT(static_cast<double>(S.nonZeros()) / (50.0 * 50.0), 0.2);
}

TEST(Kernel, MeasurementModeRejectsDuplicates) {
  const CompactKernel k(KernelParams{}, kIntensity);
  const auto s = k.sites(std::vector<Point2>{{0.1, 0.1}, {0.1, 0.1}});
  const std::vector<double> noise = {1e-4, 1e-4};
  EXPECT_THROW(assemble_covariance(k, s, CovarianceMode::kMeasurement, noise),
               DuplicateLocationError);
  EXPECT_NO_THROW(assemble_covariance(k, s, CovarianceMode::kPrior));
}

TEST(Field, NoiselessInterpolation) {
  GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
  f.append(f.make_observation({0.5, 0.5}, 0.9, 0.0));
  const Moments m = f.condition(Point2{0.5, 0.5});
  EXPECT_NEAR(m.mean, 0.9, 1e-12);
  EXPECT_NEAR(m.variance, 0.0, 1e-14);
}

TEST(Field, FarQueryReturnsPrior) {
  const CompactKernel k(KernelParams{}, kIntensity);
  GaussianField f(kMean, k);
  f.append(f.make_observation({0.5, 0.5}, 0.9, 1e-4));
  const Point2 q{1.5, 1.5};
  const Moments m = f.condition(q);
  EXPECT_EQ(m.mean, kMean(q));
  EXPECT_EQ(m.variance, k.variance(k.site(q)));
}

oracle::GpInstance oracle_instance(const GaussianField& f, std::span<const Point2> q) {
  oracle::GpInstance g;
  const KernelParams& p = f.kernel().params();
  g.kernel = {p.sigma0, p.ell, p.n0, p.q_ref};
  for (const Observation& o : f.observations()) {
    g.x.push_back(o.x);
    g.ix.push_back(kIntensity(o.x));
    g.y.push_back(o.y);
    g.mu.push_back(o.prior_mean);
    g.noise.push_back(o.variance - f.kernel().variance(f.kernel().site(o.x)));
  }
  for (Point2 x : q) {
    g.q.push_back(x);
    g.iq.push_back(kIntensity(x));
    g.mu_q.push_back(kMean(x));
  }
  return g;
}

TEST(Field, MatchesDenseOracle) {
  Rng rng(8);
  std::uniform_real_distribution<double> y(-0.5, 0.5), nz(1e-5, 1e-3);
  for (int t = 0; t < 10; ++t) {
    GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
    for (Point2 x : random_points(5, 0.6, rng)) f.append(f.make_observation(x, y(rng), nz(rng)));
    const auto q = random_points(4, 0.6, rng);
    const oracle::GpAnswer ref = oracle::dense_gp_posterior(oracle_instance(f, q));
    for (std::size_t j = 0; j < q.size(); ++j) {
      const Moments m = f.condition(q[j]);
      EXPECT_LT(testing::rel_diff(m.mean, ref.mean[j]), 1e-8);
      EXPECT_LT(testing::rel_diff(m.variance, ref.variance[j]), 1e-8);
    }
  }
}

TEST(Field, SequentialEqualsBatchAndGrid) {
  Rng rng(9);
  std::uniform_real_distribution<double> y(-0.5, 0.5);
  GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
  const auto q = random_points(30, 1.0, rng);
  const auto early = f.attach_grid(q);
  for (Point2 x : random_points(25, 1.0, rng)) f.append(f.make_observation(x, y(rng), 2e-4));
  const auto late = f.attach_grid(q);
  const auto batch = f.condition_batch(q);
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Moments m = f.condition(q[j]);
    EXPECT_LT(testing::rel_diff(m.mean, batch[j].mean, 1e-12), 1e-8);
    EXPECT_LT(testing::rel_diff(m.variance, batch[j].variance, 1e-12), 1e-8);
    EXPECT_LT(testing::rel_diff(f.grid_mean(early)[j], m.mean, 1e-12), 1e-10);
    EXPECT_LT(testing::rel_diff(f.grid_variance(early)[j], m.variance, 1e-12), 1e-8);
    EXPECT_LT(testing::rel_diff(f.grid_mean(late)[j], m.mean, 1e-12), 1e-10);
  }
}

TEST(Field, VarianceNeverIncreases) {
  Rng rng(10);
  GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
  const auto q = random_points(40, 1.0, rng);
  std::vector<double> prev;
  for (const Moments& m : f.condition(q)) prev.push_back(m.variance);
  for (Point2 x : random_points(15, 1.0, rng)) {
    f.append(f.make_observation(x, 0.2, 1e-4));
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double v = f.condition(q[j]).variance;
      EXPECT_LE(v, prev[j] + 1e-12);
      prev[j] = v;
    }
  }
}

TEST(Field, ShrinksTowardData) {
  GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
  const Point2 x{0.4, 0.7};
  f.append(f.make_observation(x, 1.0, 1e-3));
  EXPECT_LE(std::abs(f.condition(x).mean - 1.0), std::abs(kMean(x) - 1.0));
}

TEST(Field, RejectsDuplicateAndIllConditioned) {
  const CompactKernel k(KernelParams{}, kIntensity);
  GaussianField f(kMean, k);
  f.append(f.make_observation({0.5, 0.5}, 0.1, 1e-4));
  EXPECT_THROW(f.append(f.make_observation({0.5, 0.5}, 0.2, 1e-4)), DuplicateLocationError);
  Observation bad = f.make_observation({0.51, 0.5}, 0.2, 0.0);
  bad.variance *= 0.1;
  try {
    f.append(bad);
    FAIL() << "expected IllConditionedError";
  } catch (const IllConditionedError& e) {
    EXPECT_EQ(e.first(), 1u);
    EXPECT_EQ(e.second(), 0u);
  }
}

TEST(Likelihood, StandardNormal) {
  GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
  const Point2 x{0.3, 0.3};
  const Observation at{x, kMean(x), kMean(x), 1.0};
  EXPECT_NEAR(f.log_likelihood(std::span(&at, 1)), -0.5 * std::log(2 * std::numbers::pi), 1e-15);
  const Observation off{x, kMean(x) + 3.0, kMean(x), 1.0};
  EXPECT_NEAR(f.log_likelihood(std::span(&off, 1)) - f.log_likelihood(std::span(&at, 1)), -4.5,
              1e-12);
}

TEST(Likelihood, FarBatchFactorizes) {
  GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
  f.append(f.make_observation({0.2, 0.2}, 0.3, 1e-4));
  const std::vector<Observation> b = {f.make_observation({0.3, 0.2}, 0.2, 1e-4),
                                      f.make_observation({1.5, 1.5}, 0.4, 1e-4)};
  const double joint = f.log_likelihood(b);
  const double sum = f.log_likelihood(std::span(&b[0], 1)) + f.log_likelihood(std::span(&b[1], 1));
  EXPECT_NEAR(joint, sum, 1e-12);
}

TEST(Likelihood, ChainRuleMatchesJoint) {
  Rng rng(12);
  std::uniform_real_distribution<double> y(-0.3, 0.3);
  GaussianField f(kMean, CompactKernel(KernelParams{}, kIntensity));
  f.append(f.make_observation({0.1, 0.1}, 0.05, 1e-4));
  std::vector<Observation> batch;
  for (Point2 x : random_points(6, 0.5, rng)) batch.push_back(f.make_observation(x, y(rng), 3e-4));
  const double joint = f.log_likelihood(batch);
  double chain = 0.0;
  for (const Observation& o : batch) {
    const Predictive p = f.predict_observation(o);
    const Predictive a = f.append(o);
    EXPECT_NEAR(p.log_density, a.log_density, 1e-12 * std::abs(a.log_density));
    chain += a.log_density;
  }
  EXPECT_NEAR(joint, chain, 1e-9 * std::abs(joint));
}

TEST(Srom, SingleSample) {
  const CompactKernel k(KernelParams{}, kIntensity);
  const GaussianField f(kMean, k);
  const Point2 x0{0.6, 0.4};
  const Observation o = marginalize_location(f, make_location_srom(x0, 0.025, 1), 0.3, 1e-4);
  EXPECT_EQ(o.prior_mean, kMean(x0));
  EXPECT_NEAR(o.variance, k.variance(k.site(x0)) + 1e-4, 1e-18);
}

TEST(Srom, FlatMeanHasNoSpreadTerm) {
  const CompactKernel k(KernelParams{}, kIntensity);
  const GaussianField f([](Point2) { return 0.2; }, k);
  const LocationSrom s = make_location_srom({0.6, 0.4}, 0.05, 5);
  double avg = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) avg += s.weights[i] * k.variance(k.site(s.samples[i]));
  const Observation o = marginalize_location(f, s, 0.3, 0.0);
  EXPECT_NEAR(o.variance, std::max(avg, k.variance(k.site({0.6, 0.4}))), 1e-18);
}

TEST(Srom, RulesMatchGaussianMoments) {
  for (std::size_t n : {5u, 9u}) {
    const LocationSrom s = make_location_srom({1.0, 2.0}, 0.1, n);
    double mx = 0, my = 0, vx = 0, vy = 0, cxy = 0, kx = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double dx = s.samples[i].x - 1.0, dy = s.samples[i].y - 2.0;
      mx += s.weights[i] * dx;
      my += s.weights[i] * dy;
      vx += s.weights[i] * dx * dx;
      vy += s.weights[i] * dy * dy;
      cxy += s.weights[i] * dx * dy;
      kx += s.weights[i] * dx * dx * dx * dx;
    }
    EXPECT_NEAR(mx, 0.0, 1e-15);
    EXPECT_NEAR(my, 0.0, 1e-15);
    EXPECT_NEAR(vx, 0.01, 1e-15);
    EXPECT_NEAR(vy, 0.01, 1e-15);
    EXPECT_NEAR(cxy, 0.0, 1e-15);
    EXPECT_NEAR(kx, 3e-4, 1e-15);
  }
  EXPECT_THROW(make_location_srom({0, 0}, 0.1, 4), ArgumentError);
}

TEST(Srom, MatchesMonteCarlo) {
  const CompactKernel k(KernelParams{}, kIntensity);
  const ScalarFieldFn steep = [](Point2 x) { return 2.0 * x.x - 1.5 * x.y; };
  const GaussianField f(steep, k);
  const Point2 x0{0.7, 0.9};
  const Observation o = marginalize_location(f, make_location_srom(x0, 0.025, 5), 0.0, 1e-4);
  const auto [m, v] = oracle::location_monte_carlo(
      steep, [&](Point2 x) { return k.variance(k.site(x)); }, x0, 0.025, 1e-4, 1000000, 4);
  EXPECT_LT(testing::rel_diff(o.variance, v), 0.15);
  EXPECT_NEAR(o.prior_mean, m, 1e-3);
}

TEST(Mixture, HandValues) {
  const std::vector<Moments> one = {{0.3, 0.2}};
  const std::vector<double> w1 = {1.0};
  const Moments a = mixture_moments(one, w1);
  EXPECT_EQ(a.mean, 0.3);
  EXPECT_EQ(a.variance, 0.2);
  const std::vector<Moments> two = {{1.0, 0.0}, {-1.0, 0.0}};
  const std::vector<double> w2 = {0.5, 0.5};
  const Moments b = mixture_moments(two, w2);
  EXPECT_EQ(b.mean, 0.0);
  EXPECT_EQ(b.variance, 1.0);
  const std::vector<double> bad = {0.5, 0.6};
  EXPECT_THROW(mixture_moments(two, bad), ArgumentError);
}

TEST(Mixture, MatchesMonteCarlo) {
  const std::vector<double> means = {0.2, -0.4, 0.9}, vars = {0.01, 0.09, 0.04},
                            w = {0.5, 0.3, 0.2};
  std::vector<Moments> comps;
  for (int j = 0; j < 3; ++j) comps.push_back({means[j], vars[j]});
  const Moments m = mixture_moments(comps, w);
  const auto [mc_mean, mc_var] = oracle::mixture_monte_carlo(means, vars, w, 1000000, 5);
  EXPECT_LT(std::abs(m.mean - mc_mean), 0.01 * std::sqrt(m.variance));
  EXPECT_LT(testing::rel_diff(m.variance, mc_var), 0.01);
}

}  // namespace
TEST(LatticeDraw, NodeCovarianceMatchesKernel) {
  const CompactKernel k({0.2, 0.35, 200.0, 0.78}, [](Point2 x) { return 0.1 + 0.2 * x.x; });
  const int draws = 4000;
  double s00 = 0.0, s01 = 0.0, s11 = 0.0, s_far = 0.0;
  int i0 = 0, j0 = 0;
  for (int r = 0; r < draws; ++r) {
    const LatticeDraw d(k, 1.0, 0.8, 0.1, 9000 + r);
    if (r == 0) {
      ASSERT_EQ(d.nx(), 11);
      ASSERT_EQ(d.ny(), 9);
      i0 = 4;
      j0 = 4;
    }
    const double a = d.node(i0, j0), b = d.node(i0 + 1, j0), c = d.node(i0 + 5, j0);
    s00 += a * a;
    s01 += a * b;
    s11 += b * b;
    s_far += a * c;
  }
  const Point2 pa{0.4, 0.4}, pb{0.5, 0.4};
  // Sample second moments of a Gaussian have relative std sqrt(2 / draws).
  EXPECT_NEAR(s00 / draws, k(pa, pa), 0.1 * k(pa, pa));
  EXPECT_NEAR(s11 / draws, k(pb, pb), 0.1 * k(pb, pb));
  EXPECT_NEAR(s01 / draws, k(pa, pb), 0.1 * k(pa, pa));
  EXPECT_NEAR(s_far / draws, 0.0, 0.1 * k(pa, pa));
}

TEST(LatticeDraw, InterpolatesBetweenNodes) {
  const CompactKernel k({0.3, 0.35, 200.0, 0.78});
  const LatticeDraw d(k, 1.0, 1.0, 0.1, 5);
  EXPECT_NEAR(d({0.3, 0.7}), d.node(3, 7), 1e-12);
  EXPECT_NEAR(d({0.35, 0.7}), 0.5 * (d.node(3, 7) + d.node(4, 7)), 1e-12);
  EXPECT_DOUBLE_EQ(d({-1.0, 2.0}), d.node(0, 10));
  const LatticeDraw again(k, 1.0, 1.0, 0.1, 5);
  EXPECT_EQ(again({0.123, 0.456}), d({0.123, 0.456}));
}

}  // namespace flowlearn

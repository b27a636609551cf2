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

// Oracle instances: a JSON problem is solved twice, once by the library
// and once by the brute-force reference, and both answers are returned.
//
//   {"kind": "dense-gp" | "mixture" | "srom" | "subset-entropy" | "bootstrap", ...}
//
// Linear fields are given as [a, b, c] meaning a + b x + c y.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "flowlearn/error.hpp"
#include "flowlearn/gaussian_field.hpp"
#include "flowlearn/mixture.hpp"
#include "flowlearn/oracle.hpp"
#include "flowlearn/sigproc.hpp"
#include "flowlearn/srom.hpp"

namespace flowlearn {

namespace detail {

using nlohmann::json;

inline const json& field_of(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("oracle instance is missing '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
T value_of(const json& j, const char* key) {
  try {
    return field_of(j, key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("oracle instance has an invalid '") + key + "'");
  }
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? value_of<T>(j, key) : fallback;
}

inline std::vector<Point2> points_of(const json& j, const char* key) {
  std::vector<Point2> out;
  for (const auto& p : value_of<std::vector<std::vector<double>>>(j, key)) {
    if (p.size() != 2) throw ConfigError(std::string("points in '") + key + "' need two values");
    out.push_back({p[0], p[1]});
  }
  return out;
}

inline ScalarFieldFn linear_of(const json& j, const char* key, std::vector<double> fallback) {
  const auto c = value_or(j, key, fallback);
  if (c.size() != 3) throw ConfigError(std::string("'") + key + "' needs three coefficients");
  return [c](Point2 x) { return c[0] + c[1] * x.x + c[2] * x.y; };
}

inline KernelParams kernel_of(const json& j) {
  KernelParams p;
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    p.sigma0 = value_or(k, "sigma0", p.sigma0);
    p.ell = value_or(k, "ell", p.ell);
    p.n0 = value_or(k, "n0", p.n0);
    p.q_ref = value_or(k, "q_ref", p.q_ref);
  }
  try {
    p.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline oracle::KernelSpec spec_of(const KernelParams& p) {
  return {p.sigma0, p.ell, p.n0, p.q_ref};
}

inline void require_sizes(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("oracle instance: ") + what);
}

inline json dense_gp(const json& j) {
  const KernelParams kp = kernel_of(j);
  const ScalarFieldFn intensity = linear_of(j, "intensity", {0.1, 0.0, 0.0});
  const ScalarFieldFn mean = linear_of(j, "prior_mean", {0.0, 0.0, 0.0});
  const auto x = points_of(j, "x");
  const auto y = value_of<std::vector<double>>(j, "y");
  const auto noise = value_of<std::vector<double>>(j, "noise");
  const auto q = points_of(j, "queries");
  require_sizes(x.size() == y.size() && x.size() == noise.size(), "x, y and noise differ in length");

  GaussianField f(mean, CompactKernel(kp, intensity));
  for (std::size_t a = 0; a < x.size(); ++a) f.append(f.make_observation(x[a], y[a], noise[a]));
  json lib = {{"mean", json::array()}, {"variance", json::array()}};
  for (const Moments& m : f.condition(q)) {
    lib["mean"].push_back(m.mean);
    lib["variance"].push_back(m.variance);
  }

  oracle::GpInstance g;
  g.kernel = spec_of(kp);
  g.x = x;
  g.y = y;
  g.noise = noise;
  g.q = q;
  for (Point2 p : x) {
    g.ix.push_back(intensity(p));
    g.mu.push_back(mean(p));
  }
  for (Point2 p : q) {
    g.iq.push_back(intensity(p));
    g.mu_q.push_back(mean(p));
  }
  const oracle::GpAnswer ref = oracle::dense_gp_posterior(g);
  return {{"library", lib}, {"oracle", {{"mean", ref.mean}, {"variance", ref.variance}}}};
}

inline json mixture(const json& j) {
  const auto means = value_of<std::vector<double>>(j, "means");
  const auto vars = value_of<std::vector<double>>(j, "variances");
  const auto w = value_of<std::vector<double>>(j, "weights");
  require_sizes(!means.empty() && means.size() == vars.size() && means.size() == w.size(),
                "means, variances and weights differ in length");
  std::vector<Moments> comps;
  for (std::size_t c = 0; c < means.size(); ++c) comps.push_back({means[c], vars[c]});
  const Moments lib = mixture_moments(comps, w);
  const auto [m, v] = oracle::mixture_monte_carlo(means, vars, w, value_or<std::size_t>(j, "draws", 1000000),
                                                  value_or<std::uint64_t>(j, "seed", 1));
  return {{"library", {{"mean", lib.mean}, {"variance", lib.variance}}},
          {"oracle", {{"mean", m}, {"variance", v}}}};
}

inline json srom(const json& j) {
  const KernelParams kp = kernel_of(j);
  const ScalarFieldFn intensity = linear_of(j, "intensity", {0.1, 0.0, 0.0});
  const ScalarFieldFn mean = linear_of(j, "prior_mean", {0.0, 0.0, 0.0});
  const auto x0v = value_of<std::vector<double>>(j, "x0");
  require_sizes(x0v.size() == 2, "'x0' needs two values");
  const Point2 x0{x0v[0], x0v[1]};
  const double std = value_of<double>(j, "std");
  const double noise = value_or(j, "noise", 0.0);
  const std::size_t n = value_or<std::size_t>(j, "srom_size", 5);

  const GaussianField f(mean, CompactKernel(kp, intensity));
  Observation o;
  try {
    o = marginalize_location(f, make_location_srom(x0, std, n), 0.0, noise);
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  const CompactKernel k(kp, intensity);
  const auto [m, v] = oracle::location_monte_carlo(
      mean, [&](Point2 x) { return k.variance(k.site(x)); }, x0, std, noise,
      value_or<std::size_t>(j, "draws", 400000), value_or<std::uint64_t>(j, "seed", 1));
  return {{"library", {{"mean", o.prior_mean}, {"variance", o.variance}}},
          {"oracle", {{"mean", m}, {"variance", v}}}};
}

/// Greedy maximum-variance selection on a GaussianField against exhaustive
/// search over all subsets of the same size.
inline json subset_entropy(const json& j) {
  const KernelParams kp = kernel_of(j);
  const ScalarFieldFn intensity = linear_of(j, "intensity", {0.1, 0.0, 0.0});
  const auto pts = points_of(j, "points");
  const double noise = value_of<double>(j, "noise");
  const std::size_t m = value_of<std::size_t>(j, "m");
  require_sizes(m >= 1 && m <= pts.size() && pts.size() <= 20, "need 1 <= m <= n <= 20");

  GaussianField f([](Point2) { return 0.0; }, CompactKernel(kp, intensity));
  std::vector<std::size_t> chosen;
  std::vector<bool> used(pts.size(), false);
  for (std::size_t s = 0; s < m; ++s) {
    std::size_t best = 0;
    double best_var = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (used[i]) continue;
      const double v = f.condition(pts[i]).variance;
      if (v > best_var) {
        best_var = v;
        best = i;
      }
    }
    used[best] = true;
    chosen.push_back(best);
    f.append(f.make_observation(pts[best], 0.0, noise));
  }

  const oracle::KernelSpec ks = spec_of(kp);
  Eigen::MatrixXd cov(pts.size(), pts.size());
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = 0; b < pts.size(); ++b) {
      cov(a, b) = ks(pts[a], intensity(pts[a]), pts[b], intensity(pts[b]));
    }
    cov(a, a) += noise;
  }
  const oracle::SubsetResult best = oracle::best_subset_entropy(cov, m);
  std::vector<std::size_t> sorted = chosen;
  std::sort(sorted.begin(), sorted.end());
  const double greedy = oracle::gaussian_entropy(oracle::submatrix(cov, sorted));
  return {{"library", {{"subset", chosen}, {"entropy", greedy}}},
          {"oracle", {{"subset", best.best}, {"entropy", best.best_entropy},
                      {"enumerated", best.enumerated}}}};
}

inline json bootstrap(const json& j) {
  const std::size_t batches = value_or<std::size_t>(j, "batches", 200);
  const double q_ref = value_or(j, "q_ref", 0.78);
  const oracle::BootstrapCheck c = oracle::nested_bootstrap(
      value_or<std::size_t>(j, "replicates", 200), value_or<std::size_t>(j, "n", 200),
      value_or(j, "sigma_u", 0.06), value_or(j, "sigma_v", 0.05), q_ref,
      value_or<std::uint64_t>(j, "seed", 1),
      [&](const std::vector<double>& u, const std::vector<double>& v, std::uint64_t s) {
        return bootstrap_intensity_variance(u, v, 0.0, 0.0, q_ref, batches, s);
      });
  return {{"library", {{"variance", c.mean_bootstrap_variance}}},
          {"oracle", {{"variance", c.empirical_variance}}}};
}

}  // namespace detail

inline nlohmann::json solve_oracle_instance(const nlohmann::json& j) {
  const std::string kind = detail::value_of<std::string>(j, "kind");
  nlohmann::json out;
  if (kind == "dense-gp") {
    out = detail::dense_gp(j);
  } else if (kind == "mixture") {
    out = detail::mixture(j);
  } else if (kind == "srom") {
    out = detail::srom(j);
  } else if (kind == "subset-entropy") {
    out = detail::subset_entropy(j);
  } else if (kind == "bootstrap") {
    out = detail::bootstrap(j);
  } else {
    throw ConfigError("unknown oracle kind '" + kind + "'");
  }
  out["kind"] = kind;
  return out;
}

}  // namespace flowlearn

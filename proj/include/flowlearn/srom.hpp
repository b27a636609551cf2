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

// Reduced-order samples of an isotropic Gaussian location error and the
// moment-matched observation they induce.

#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "flowlearn/error.hpp"
#include "flowlearn/gaussian_field.hpp"
#include "flowlearn/geometry.hpp"

namespace flowlearn {

/// Weighted samples; samples[0] is always the nominal location.
struct LocationSrom {
  std::vector<Point2> samples;
  std::vector<double> weights;

  std::size_t size() const { return samples.size(); }

  void validate() const {
    if (samples.empty() || samples.size() != weights.size()) {
      throw ArgumentError("SROM needs matching non-empty samples and weights");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw ArgumentError("SROM weights must be positive");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ArgumentError("SROM weights must sum to one");
  }
};

/// Supported sizes:
///   1  nominal point only;
///   5  nominal (1/3) plus four axis points at sqrt(3) std (1/6 each), which
///      matches mean, covariance and marginal fourth moments;
///   9  tensor three-point Gauss-Hermite rule.
inline LocationSrom make_location_srom(Point2 x0, double std, std::size_t n) {
  if (std < 0.0) throw ArgumentError("location std must be >= 0");
  LocationSrom s;
  if (n == 1 || std == 0.0) {
    s.samples = {x0};
    s.weights = {1.0};
    return s;
  }
  const double h = std::sqrt(3.0) * std;
  if (n == 5) {
    s.samples = {x0, {x0.x + h, x0.y}, {x0.x - h, x0.y}, {x0.x, x0.y + h}, {x0.x, x0.y - h}};
    s.weights = {1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    return s;
  }
  if (n == 9) {
    const double off[3] = {0.0, h, -h};
    const double w[3] = {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        s.samples.push_back({x0.x + off[a], x0.y + off[b]});
        s.weights.push_back(w[a] * w[b]);
      }
    }
    return s;
  }
  throw ArgumentError("SROM size must be 1, 5 or 9");
}

/// Gaussian surrogate for a measurement taken at an uncertain location:
///   mean     = sum_k p_k mu(x_k)
///   variance = sum_k p_k [k(x_k, x_k) + noise + (mu(x_k) - mean)^2]
/// The variance is kept at least k(x0, x0) + noise, the value without
/// location error.
inline Observation marginalize_location(const GaussianField& field, const LocationSrom& srom,
                                        double y, double noise_variance) {
  srom.validate();
  if (noise_variance < 0.0) throw ArgumentError("noise variance must be >= 0");
  const CompactKernel& k = field.kernel();
  std::vector<double> mu(srom.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < srom.size(); ++i) {
    mu[i] = field.prior_mean(srom.samples[i]);
    mean += srom.weights[i] * mu[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < srom.size(); ++i) {
    const double d = mu[i] - mean;
    var += srom.weights[i] * (k.variance(k.site(srom.samples[i])) + noise_variance + d * d);
  }
  const double nominal = k.variance(k.site(srom.samples[0])) + noise_variance;
  return {srom.samples[0], y, mean, std::max(var, nominal)};
}

}  // namespace flowlearn

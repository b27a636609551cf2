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

#include "flowlearn/error.hpp"
#include "flowlearn/gaussian_field.hpp"

namespace flowlearn {

/// Mean and variance of a Gaussian mixture: the mean of the component
/// variances plus the variance of the component means.
inline Moments mixture_moments(std::span<const Moments> components,
                               std::span<const double> weights) {
  if (components.size() != weights.size() || components.empty()) {
    throw ArgumentError("mixture needs one weight per component");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ArgumentError("mixture weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("mixture weights must sum to one");
  Moments m;
  for (std::size_t j = 0; j < weights.size(); ++j) m.mean += weights[j] * components[j].mean;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double d = components[j].mean - m.mean;
    m.variance += weights[j] * (components[j].variance + d * d);
  }
  return m;
}

/// Pointwise mixture over per-model grids of means and variances.
inline std::vector<Moments> mixture_moments(std::span<const std::vector<double>* const> means,
                                            std::span<const std::vector<double>* const> vars,
                                            std::span<const double> weights) {
  if (means.size() != weights.size() || vars.size() != weights.size() || weights.empty()) {
    throw ArgumentError("mixture needs one weight per component");
  }
  const std::size_t G = means[0]->size();
  std::vector<Moments> out(G);
  std::vector<Moments> comp(weights.size());
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t j = 0; j < weights.size(); ++j) comp[j] = {(*means[j])[g], (*vars[j])[g]};
    out[g] = mixture_moments(comp, weights);
  }
  return out;
}

}  // namespace flowlearn

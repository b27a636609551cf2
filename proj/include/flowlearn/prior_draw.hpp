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

// Sample paths of a zero-mean field with a compact prior kernel, drawn on a
// regular lattice and interpolated bilinearly in between.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Sparse>

#include "flowlearn/error.hpp"
#include "flowlearn/geometry.hpp"
#include "flowlearn/kernel.hpp"
#include "flowlearn/random.hpp"

namespace flowlearn {

class LatticeDraw {
 public:
  /// Lattice over [0, width] x [0, height] with spacing at most `h`.
  LatticeDraw(const CompactKernel& k, double width, double height, double h,
              std::uint64_t seed) {
    if (!(width > 0.0 && height > 0.0 && h > 0.0)) {
      throw ArgumentError("lattice draw needs a positive extent and spacing");
    }
    nx_ = static_cast<int>(std::ceil(width / h)) + 1;
    ny_ = static_cast<int>(std::ceil(height / h)) + 1;
    hx_ = width / (nx_ - 1);
    hy_ = height / (ny_ - 1);
    const int n = nx_ * ny_;
    std::vector<Site> s;
    s.reserve(n);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) s.push_back(k.site({i * hx_, j * hy_}));
    }
    const double ell = k.params().ell;
    const int rx = static_cast<int>(std::ceil(ell / hx_));
    const int ry = static_cast<int>(std::ceil(ell / hy_));
    std::vector<Eigen::Triplet<double>> trip;
    double vmax = 0.0;
    for (const Site& a : s) vmax = std::max(vmax, k.variance(a));
    for (int a = 0; a < n; ++a) {
      const int ia = a % nx_, ja = a / nx_;
      for (int jb = std::max(0, ja - ry); jb <= std::min(ny_ - 1, ja + ry); ++jb) {
        for (int ib = std::max(0, ia - rx); ib <= std::min(nx_ - 1, ia + rx); ++ib) {
          const int b = jb * nx_ + ib;
          if (b > a) continue;
          double v = k(s[a], s[b]);
          if (a == b) v += 1e-10 * vmax + 1e-300;
          if (v != 0.0) trip.emplace_back(a, b, v);
        }
      }
    }
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt(K);
    if (llt.info() != Eigen::Success) throw Error("lattice draw factorization failed");
    Rng rng(seed);
    Eigen::VectorXd z(n);
    for (int a = 0; a < n; ++a) z[a] = standard_normal(rng);
    // K = P^T L L^T P, so P^T L z has covariance K.
    const Eigen::VectorXd lz = llt.matrixL() * z;
    values_ = llt.permutationPinv() * lz;
  }

  double operator()(Point2 x) const {
    const double fx = std::clamp(x.x / hx_, 0.0, nx_ - 1.0);
    const double fy = std::clamp(x.y / hy_, 0.0, ny_ - 1.0);
    const int i = std::min(static_cast<int>(fx), nx_ - 2);
    const int j = std::min(static_cast<int>(fy), ny_ - 2);
    const double tx = fx - i, ty = fy - j;
    auto at = [&](int a, int b) { return values_[b * nx_ + a]; };
    return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
           (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  /// Value at lattice node (i, j).
  double node(int i, int j) const { return values_[j * nx_ + i]; }

 private:
  int nx_ = 0, ny_ = 0;
  double hx_ = 0.0, hy_ = 0.0;
  Eigen::VectorXd values_;
};

}  // namespace flowlearn

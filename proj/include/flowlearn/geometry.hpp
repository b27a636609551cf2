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

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "flowlearn/error.hpp"

namespace flowlearn {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline double squared_distance(Point2 a, Point2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline std::string to_string(Point2 p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(Point2 p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  bool strictly_contains(Point2 p, double eps = 1e-12) const {
    return p.x > x0 + eps && p.x < x1 - eps && p.y > y0 + eps &&
           p.y < y1 - eps;
  }
  Point2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }

  /// Euclidean distance from p to the rectangle (0 inside).
  double distance_to(Point2 p) const {
    const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
    const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
    return std::hypot(dx, dy);
  }
};

/// Labeled boundary segment; descriptive only.
struct BoundarySegment {
  std::string label;
  Point2 a;
  Point2 b;
};

/// Planar projection of the measurement volume: a box with rectangular
/// obstacles. The origin is the bottom-left corner.
class Domain2D {
 public:
  Domain2D() = default;
  Domain2D(double width, double height, std::vector<Rect> obstacles = {},
           std::vector<BoundarySegment> boundaries = {})
      : width_(width),
        height_(height),
        obstacles_(std::move(obstacles)),
        boundaries_(std::move(boundaries)) {
    if (!(width_ > 0.0) || !(height_ > 0.0)) {
      throw ArgumentError("domain width and height must be positive");
    }
    for (const Rect& r : obstacles_) {
      if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) {
        throw ArgumentError("obstacle rectangle has non-positive extent");
      }
      if (r.x0 < 0.0 || r.y0 < 0.0 || r.x1 > width_ || r.y1 > height_) {
        throw ArgumentError("obstacle lies outside the domain box");
      }
    }
  }

  double width() const { return width_; }
  double height() const { return height_; }
  double area() const { return width_ * height_; }
  const std::vector<Rect>& obstacles() const { return obstacles_; }
  const std::vector<BoundarySegment>& boundaries() const { return boundaries_; }

  bool in_box(Point2 p) const {
    return p.x >= 0.0 && p.x <= width_ && p.y >= 0.0 && p.y <= height_;
  }
  bool in_obstacle(Point2 p) const {
    return std::any_of(obstacles_.begin(), obstacles_.end(),
                       [&](const Rect& r) { return r.contains(p); });
  }
  bool is_free(Point2 p) const { return in_box(p) && !in_obstacle(p); }

  /// Distance to the nearest wall or obstacle; negative outside the free set.
  double clearance(Point2 p) const {
    if (!is_free(p)) return -1.0;
    double c = std::min({p.x, width_ - p.x, p.y, height_ - p.y});
    for (const Rect& r : obstacles_) c = std::min(c, r.distance_to(p));
    return c;
  }

  void require_in_box(Point2 p) const {
    if (!in_box(p)) throw DomainError("point " + to_string(p) + " outside domain");
  }
  void require_free(Point2 p) const {
    require_in_box(p);
    if (in_obstacle(p)) {
      throw DomainError("point " + to_string(p) + " lies inside an obstacle");
    }
  }

 private:
  double width_ = 1.0;
  double height_ = 1.0;
  std::vector<Rect> obstacles_;
  std::vector<BoundarySegment> boundaries_;
};

/// Row-major grid of free points at the given spacing, keeping at least
/// `clearance` from walls and obstacles. Row 0 is the bottom row.
inline std::vector<Point2> free_grid(const Domain2D& domain, double spacing,
                                     double clearance = 0.0) {
  if (!(spacing > 0.0)) throw ArgumentError("grid spacing must be positive");
  const int nx = static_cast<int>(std::floor(domain.width() / spacing + 1e-9));
  const int ny = static_cast<int>(std::floor(domain.height() / spacing + 1e-9));
  // Center the lattice in the box.
  const double ox = 0.5 * (domain.width() - (nx - 1) * spacing);
  const double oy = 0.5 * (domain.height() - (ny - 1) * spacing);
  std::vector<Point2> out;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Point2 p{ox + i * spacing, oy + j * spacing};
      if (domain.is_free(p) && domain.clearance(p) >= clearance - 1e-12) {
        out.push_back(p);
      }
    }
  }
  return out;
}

/// Index of the point in `points` nearest to `p`; ties go to the lower index.
inline std::size_t nearest_index(std::span<const Point2> points, Point2 p) {
  if (points.empty()) throw ArgumentError("nearest_index on empty point set");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double d = squared_distance(points[k], p);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

/// Shortest obstacle-avoiding path lengths via a visibility graph over the
/// (slightly inflated) obstacle corners.
class GeodesicMap {
 public:
  explicit GeodesicMap(const Domain2D& domain, double corner_offset = 1e-6)
      : domain_(domain) {
    for (const Rect& r : domain.obstacles()) {
      const double e = corner_offset;
      for (Point2 c : {Point2{r.x0 - e, r.y0 - e}, Point2{r.x1 + e, r.y0 - e},
                       Point2{r.x1 + e, r.y1 + e}, Point2{r.x0 - e, r.y1 + e}}) {
        if (domain.is_free(c)) corners_.push_back(c);
      }
    }
  }

  /// True when the straight segment a-b does not cross any obstacle interior.
  bool visible(Point2 a, Point2 b) const {
    for (const Rect& r : domain_.obstacles()) {
      if (crosses_interior(a, b, r)) return false;
    }
    return true;
  }

  /// Geodesic distance from `from` to every target. Unreachable targets (or
  /// targets inside obstacles) get +inf.
  std::vector<double> distances(Point2 from, std::span<const Point2> targets) const {
    const std::size_t nc = corners_.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nc, kInf);
    if (nc > 0) {
      // Dijkstra over corners, seeded by direct visibility from the origin.
      std::vector<bool> done(nc, false);
      for (std::size_t c = 0; c < nc; ++c) {
        if (visible(from, corners_[c])) dist[c] = distance(from, corners_[c]);
      }
      for (std::size_t iter = 0; iter < nc; ++iter) {
        std::size_t u = nc;
        double best = kInf;
        for (std::size_t c = 0; c < nc; ++c) {
          if (!done[c] && dist[c] < best) {
            best = dist[c];
            u = c;
          }
        }
        if (u == nc) break;
        done[u] = true;
        for (std::size_t c = 0; c < nc; ++c) {
          if (done[c]) continue;
          const double alt = dist[u] + distance(corners_[u], corners_[c]);
          if (alt < dist[c] && visible(corners_[u], corners_[c])) dist[c] = alt;
        }
      }
    }
    std::vector<double> out(targets.size(), kInf);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const Point2 p = targets[t];
      if (!domain_.is_free(p)) continue;
      if (visible(from, p)) {
        out[t] = distance(from, p);
        continue;
      }
      for (std::size_t c = 0; c < nc; ++c) {
        if (dist[c] == kInf) continue;
        const double alt = dist[c] + distance(corners_[c], p);
        if (alt < out[t] && visible(corners_[c], p)) out[t] = alt;
      }
    }
    return out;
  }

  double distance_between(Point2 a, Point2 b) const {
    const Point2 t[1] = {b};
    return distances(a, t)[0];
  }

 private:
  // Liang-Barsky clip of segment a-b against r; blocked if a piece of
  // positive length lies strictly inside.
  static bool crosses_interior(Point2 a, Point2 b, const Rect& r) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
    for (int k = 0; k < 4; ++k) {
      if (p[k] == 0.0) {
        if (q[k] < 0.0) return false;
        continue;
      }
      const double t = q[k] / p[k];
      if (p[k] < 0.0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
      if (t0 > t1) return false;
    }
    if (t1 - t0 <= 1e-12) return false;
    const double tm = 0.5 * (t0 + t1);
    return r.strictly_contains({a.x + tm * dx, a.y + tm * dy}, 1e-9);
  }

  Domain2D domain_;
  std::vector<Point2> corners_;
};

}  // namespace flowlearn

/* geometry.hpp -- points, bounding boxes and planar region shapes. */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tlsynth {

// continuous MDP state: a point in R^n (coordinates in km for the rover maps)
using State = std::vector<double>;

inline double sq_distance(const State& a, const State& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline double distance(const State& a, const State& b) {
  return std::sqrt(sq_distance(a, b));
}

struct Box {
  State lo;
  State hi;

  std::size_t dimension() const { return lo.size(); }

  double diagonal() const { return distance(lo, hi); }

  bool contains(const State& s, double eps = 0.0) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (s[i] < lo[i] - eps || s[i] > hi[i] + eps) return false;
    return true;
  }

  State clamped(State s) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (s[i] < lo[i]) s[i] = lo[i];
      if (s[i] > hi[i]) s[i] = hi[i];
    }
    return s;
  }

  // per-axis rescale to [0,1]^n
  State normalized(const State& s) const {
    State out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double w = hi[i] - lo[i];
      out[i] = w > 0.0 ? (s[i] - lo[i]) / w : 0.0;
    }
    return out;
  }
};

struct Circle {
  double cx = 0.0, cy = 0.0, radius = 0.0;
  // closed region: boundary points are inside
  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    return dx * dx + dy * dy <= radius * radius;
  }
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

struct Polygon {
  std::vector<std::pair<double, double>> vertices;

  // even-odd crossing test; points on an edge count as inside
  bool contains(double x, double y) const {
    const std::size_t n = vertices.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto [xi, yi] = vertices[i];
      const auto [xj, yj] = vertices[j];
      if (on_segment(x, y, xi, yi, xj, yj)) return true;
      if ((yi > y) != (yj > y)) {
        const double x_cross = xj + (y - yj) / (yi - yj) * (xi - xj);
        if (x < x_cross) inside = !inside;
      }
    }
    return inside;
  }

 private:
  static bool on_segment(double px, double py, double ax, double ay, double bx,
                         double by) {
    const double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    if (cross != 0.0) return false;
    return px >= std::min(ax, bx) && px <= std::max(ax, bx) &&
           py >= std::min(ay, by) && py <= std::max(ay, by);
  }
};

}  // namespace tlsynth

#pragma once

#include <cmath>

namespace cellfree {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Distance on the wrap-around square (torus metric): minimum over the nine
/// shifted images of p2, which for an axis-aligned torus reduces to wrapping
/// each coordinate difference independently. Bounded by area_side*sqrt(2)/2.
inline double wraparound_distance(const Point& p1, const Point& p2,
                                  double area_side) {
  double dx = std::fabs(p1.x - p2.x);
  double dy = std::fabs(p1.y - p2.y);
  dx = std::min(dx, area_side - dx);
  dy = std::min(dy, area_side - dy);
  return std::hypot(dx, dy);
}

}  // namespace cellfree

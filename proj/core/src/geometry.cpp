#include "samtrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "samtrack/errors.hpp"

namespace samtrack {

namespace {

using Point = std::array<double, 2>;

double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Extents of pts projected onto the frame rotated by ang.
struct Extents {
  double min_u, max_u, min_v, max_v;
};

Extents project(const std::vector<Point>& pts, double ang) {
  const double c = std::cos(ang);
  const double s = std::sin(ang);
  Extents e{std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    const double u = c * p[0] + s * p[1];
    const double v = -s * p[0] + c * p[1];
    e.min_u = std::min(e.min_u, u);
    e.max_u = std::max(e.max_u, u);
    e.min_v = std::min(e.min_v, v);
    e.max_v = std::max(e.max_v, v);
  }
  return e;
}

}  // namespace

std::pair<double, double> centroid(const MaskPair& mask, double threshold) {
  double sum_r = 0.0;
  double sum_c = 0.0;
  long count = 0;
  for (int y = 0; y < mask.h(); ++y) {
    for (int x = 0; x < mask.w(); ++x) {
      if (mask.fg.at(y, x, 0) > threshold) {
        sum_r += y;
        sum_c += x;
        ++count;
      }
    }
  }
  if (count == 0) {
    throw EmptyMaskError("centroid: no pixel above threshold");
  }
  return {sum_r / static_cast<double>(count),
          sum_c / static_cast<double>(count)};
}

std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) {
    return pts;
  }
  std::vector<Point> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

RotatedBox min_area_rect(const std::vector<Point>& pts) {
  if (pts.empty()) {
    throw DataError("rotated box: no points");
  }
  const std::vector<Point> hull = convex_hull(pts);

  constexpr double kQuarter = std::numbers::pi / 2.0;
  std::vector<double> angles{0.0};
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point& a = hull[i];
    const Point& b = hull[(i + 1) % hull.size()];
    const double dx = b[0] - a[0];
    const double dy = b[1] - a[1];
    if (dx == 0.0 && dy == 0.0) {
      continue;
    }
    double ang = std::fmod(std::atan2(dy, dx), kQuarter);
    if (ang < 0.0) {
      ang += kQuarter;
    }
    if (ang >= kQuarter) {
      ang = 0.0;
    }
    angles.push_back(ang);
  }
  std::sort(angles.begin(), angles.end());

  double best_area = std::numeric_limits<double>::infinity();
  double best_ang = 0.0;
  for (const double ang : angles) {
    const Extents e = project(hull, ang);
    const double area = (e.max_u - e.min_u + 1.0) * (e.max_v - e.min_v + 1.0);
    if (area < best_area - 1e-12) {
      best_area = area;
      best_ang = ang;
    }
  }

  const Extents e = project(hull, best_ang);
  const double c = std::cos(best_ang);
  const double s = std::sin(best_ang);
  const double mid_u = 0.5 * (e.min_u + e.max_u);
  const double mid_v = 0.5 * (e.min_v + e.max_v);
  RotatedBox box;
  box.cx = c * mid_u - s * mid_v + 0.5;
  box.cy = s * mid_u + c * mid_v + 0.5;
  box.w = e.max_u - e.min_u + 1.0;
  box.h = e.max_v - e.min_v + 1.0;
  box.theta = best_ang;
  return box;
}

BoxPair mask_to_boxes(const MaskPair& mask, double threshold) {
  int min_x = mask.w();
  int max_x = -1;
  int min_y = mask.h();
  int max_y = -1;
  // Only row-extreme pixels can be hull vertices.
  std::vector<Point> pts;
  for (int y = 0; y < mask.h(); ++y) {
    int row_min = -1;
    int row_max = -1;
    for (int x = 0; x < mask.w(); ++x) {
      if (mask.fg.at(y, x, 0) > threshold) {
        if (row_min < 0) {
          row_min = x;
        }
        row_max = x;
      }
    }
    if (row_min < 0) {
      continue;
    }
    min_x = std::min(min_x, row_min);
    max_x = std::max(max_x, row_max);
    min_y = std::min(min_y, y);
    max_y = y;
    pts.push_back({static_cast<double>(row_min), static_cast<double>(y)});
    if (row_max != row_min) {
      pts.push_back({static_cast<double>(row_max), static_cast<double>(y)});
    }
  }
  if (pts.empty()) {
    throw EmptyMaskError("boxes: no pixel above threshold");
  }
  BoxPair out;
  out.axis = AxisBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
  out.rotated = min_area_rect(pts);
  return out;
}

}  // namespace samtrack

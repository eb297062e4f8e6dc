#pragma once

#include <array>
#include <utility>
#include <vector>

#include "samtrack/mask.hpp"

namespace samtrack {

struct AxisBox {
  int x = 0;  // leftmost column
  int y = 0;  // topmost row
  int w = 0;
  int h = 0;
};

// Center, extents and angle in pixel-corner coordinates; theta in [0, pi/2)
// measured from the x axis. Extents include the one-pixel footprint
// inflation, so an axis-aligned box reproduces its AxisBox exactly.
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;

  double area() const { return w * h; }
};

struct BoxPair {
  AxisBox axis;
  RotatedBox rotated;
};

// Mean (row, col) over pixels with fg strictly above threshold.
// Throws EmptyMaskError when nothing clears it.
std::pair<double, double> centroid(const MaskPair& mask, double threshold);

// Counterclockwise convex hull (Andrew monotone chain), collinear points
// dropped. Points are (x, y).
std::vector<std::array<double, 2>> convex_hull(
    std::vector<std::array<double, 2>> pts);

// Minimum-area enclosing rectangle by rotating calipers over the hull,
// minimizing the footprint-inflated area (w+1)(h+1); the +1 and the
// half-pixel center shift convert pixel-center geometry to pixel-corner
// boxes.
RotatedBox min_area_rect(const std::vector<std::array<double, 2>>& pts);

// Tight axis-aligned box plus the minimum-area rotated box of the
// binarized mask. Throws EmptyMaskError when nothing clears the threshold.
BoxPair mask_to_boxes(const MaskPair& mask, double threshold);

}  // namespace samtrack

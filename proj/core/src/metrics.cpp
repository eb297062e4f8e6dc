#include "samtrack/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace samtrack {

namespace {

void require_same_dims(const MaskPair& a, const MaskPair& b) {
  if (a.h() != b.h() || a.w() != b.w()) {
    throw std::invalid_argument("metrics: mask dims differ");
  }
}

std::vector<char> binarize_grid(const MaskPair& m, double threshold) {
  std::vector<char> g(static_cast<std::size_t>(m.h()) * m.w());
  for (int y = 0; y < m.h(); ++y) {
    for (int x = 0; x < m.w(); ++x) {
      g[static_cast<std::size_t>(y) * m.w() + x] =
          m.fg.at(y, x, 0) >= threshold ? 1 : 0;
    }
  }
  return g;
}

// Mask pixels with a 4-neighbor outside the mask; the frame edge counts as
// outside.
std::vector<char> boundary_grid(const std::vector<char>& in, int h, int w) {
  std::vector<char> out(in.size(), 0);
  auto at = [&](int y, int x) -> char {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0;
    return in[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!at(y, x)) continue;
      if (!at(y - 1, x) || !at(y + 1, x) || !at(y, x - 1) || !at(y, x + 1)) {
        out[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  return out;
}

// Fraction of source boundary pixels with a target boundary pixel within the
// Chebyshev tolerance. Returns {matched, total}.
std::pair<long, long> match_boundary(const std::vector<char>& src,
                                     const std::vector<char>& dst, int h,
                                     int w, int tol) {
  long matched = 0;
  long total = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!src[static_cast<std::size_t>(y) * w + x]) continue;
      ++total;
      bool hit = false;
      const int y0 = std::max(0, y - tol), y1 = std::min(h - 1, y + tol);
      const int x0 = std::max(0, x - tol), x1 = std::min(w - 1, x + tol);
      for (int yy = y0; yy <= y1 && !hit; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          if (dst[static_cast<std::size_t>(yy) * w + xx]) {
            hit = true;
            break;
          }
        }
      }
      if (hit) ++matched;
    }
  }
  return {matched, total};
}

}  // namespace

double region_similarity(const MaskPair& pred, const MaskPair& gt,
                         double threshold) {
  require_same_dims(pred, gt);
  long inter = 0;
  long uni = 0;
  for (int y = 0; y < pred.h(); ++y) {
    for (int x = 0; x < pred.w(); ++x) {
      const bool p = pred.fg.at(y, x, 0) >= threshold;
      const bool g = gt.fg.at(y, x, 0) >= threshold;
      inter += p && g;
      uni += p || g;
    }
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double contour_fmeasure(const MaskPair& pred, const MaskPair& gt,
                        double threshold, int tolerance_px) {
  require_same_dims(pred, gt);
  if (tolerance_px < 0) {
    throw std::invalid_argument("metrics: tolerance must be >= 0");
  }
  const int h = pred.h(), w = pred.w();
  const auto pb = boundary_grid(binarize_grid(pred, threshold), h, w);
  const auto gb = boundary_grid(binarize_grid(gt, threshold), h, w);

  const auto [p_matched, p_total] = match_boundary(pb, gb, h, w, tolerance_px);
  const auto [g_matched, g_total] = match_boundary(gb, pb, h, w, tolerance_px);
  if (p_total == 0 && g_total == 0) return 1.0;
  if (p_total == 0 || g_total == 0) return 0.0;
  const double precision = static_cast<double>(p_matched) / p_total;
  const double recall = static_cast<double>(g_matched) / g_total;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

SequenceScores score_sequence(std::vector<double> per_frame_iou,
                              std::vector<double> per_frame_f,
                              const FailureRule& rule) {
  SequenceScores s;
  s.per_frame_iou = std::move(per_frame_iou);
  s.per_frame_f = std::move(per_frame_f);
  const int n = static_cast<int>(s.per_frame_iou.size());
  s.failed_frame.assign(n, false);
  if (n == 0) return s;

  int run = 0;
  for (int t = 0; t < n; ++t) {
    run = s.per_frame_iou[t] < rule.iou_floor ? run + 1 : 0;
    if (run == rule.consecutive) {
      ++s.failures;
      for (int k = t - rule.consecutive + 1; k <= t; ++k) {
        s.failed_frame[k] = true;
      }
      run = 0;
    }
  }

  double j_sum = 0.0;
  double a_sum = 0.0;
  int a_count = 0;
  for (int t = 0; t < n; ++t) {
    j_sum += s.per_frame_iou[t];
    if (!s.failed_frame[t]) {
      a_sum += s.per_frame_iou[t];
      ++a_count;
    }
  }
  s.j_mean = j_sum / n;
  if (!s.per_frame_f.empty()) {
    double f_sum = 0.0;
    for (double f : s.per_frame_f) f_sum += f;
    s.f_mean = f_sum / static_cast<double>(s.per_frame_f.size());
  }
  s.jf_mean = 0.5 * (s.j_mean + s.f_mean);
  s.accuracy = a_count > 0 ? a_sum / a_count : 0.0;
  s.robustness = static_cast<double>(s.failures) / n;
  return s;
}

}  // namespace samtrack

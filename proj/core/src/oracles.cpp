#include "samtrack/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "samtrack/errors.hpp"

namespace samtrack::oracle {

namespace {

int out_extent(int in, int k, int stride, Pad pad) {
  if (pad == Pad::kSame) return (in + stride - 1) / stride;
  return (in - k) / stride + 1;
}

int pad_before(int in, int k, int stride, Pad pad) {
  if (pad == Pad::kValid) return 0;
  const int out = (in + stride - 1) / stride;
  return std::max(0, (out - 1) * stride + k - in) / 2;
}

}  // namespace

FeatureMap conv2d_reference(const FeatureMap& in, const ConvWeights& k,
                            int stride, Pad pad) {
  if (in.c != k.ic) throw StateError("conv2d_reference: channel mismatch");
  const int oh = out_extent(in.h, k.kh, stride, pad);
  const int ow = out_extent(in.w, k.kw, stride, pad);
  const int pt = pad_before(in.h, k.kh, stride, pad);
  const int pl = pad_before(in.w, k.kw, stride, pad);

  FeatureMap out(oh, ow, k.oc);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int o = 0; o < k.oc; ++o) {
        long double acc = k.bias[o];
        for (int ky = 0; ky < k.kh; ++ky)
          for (int kx = 0; kx < k.kw; ++kx)
            for (int i = 0; i < k.ic; ++i) {
              const int iy = oy * stride - pt + ky;
              const int ix = ox * stride - pl + kx;
              const long double v =
                  (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w)
                      ? 0.0L
                      : static_cast<long double>(in.at(iy, ix, i));
              acc += v * static_cast<long double>(k.taps(o, ky, kx)[i]);
            }
        out.at(oy, ox, o) = static_cast<double>(acc);
      }
  return out;
}

FeatureMap attention_read_reference(
    const std::vector<std::pair<const FeatureMap*, const FeatureMap*>>& entries,
    const FeatureMap& query) {
  if (entries.empty())
    throw StateError("attention_read_reference: no entries");
  const int ck = query.c;
  const int cv = entries[0].second->c;
  FeatureMap out(query.h, query.w, cv);

  for (int q = 0; q < query.pixels(); ++q) {
    const double* qv = query.data.data() + static_cast<std::size_t>(q) * ck;
    std::vector<long double> logits;
    std::vector<const double*> vals;
    for (const auto& [key, value] : entries)
      for (int p = 0; p < key->pixels(); ++p) {
        const double* kv = key->data.data() + static_cast<std::size_t>(p) * ck;
        long double acc = 0.0L;
        for (int i = 0; i < ck; ++i)
          acc += static_cast<long double>(qv[i]) * kv[i];
        logits.push_back(acc);
        vals.push_back(value->data.data() + static_cast<std::size_t>(p) * cv);
      }
    long double mx = logits[0];
    for (long double l : logits) mx = std::max(mx, l);
    long double sum = 0.0L;
    for (long double& l : logits) {
      l = std::exp(l - mx);
      sum += l;
    }
    for (int ch = 0; ch < cv; ++ch) {
      long double acc = 0.0L;
      for (std::size_t m = 0; m < logits.size(); ++m)
        acc += logits[m] / sum * vals[m][ch];
      out.data[static_cast<std::size_t>(q) * cv + ch] =
          static_cast<double>(acc);
    }
  }
  return out;
}

std::vector<double> spd_solve_reference(std::vector<long double> A,
                                        std::vector<long double> b, int n) {
  for (int j = 0; j < n; ++j) {
    long double d = A[static_cast<std::size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) {
      const long double l = A[static_cast<std::size_t>(j) * n + k];
      d -= l * l;
    }
    if (!(d > 0.0L))
      throw NumericError("spd_solve_reference: matrix not positive definite");
    d = std::sqrt(d);
    A[static_cast<std::size_t>(j) * n + j] = d;
    for (int i = j + 1; i < n; ++i) {
      long double v = A[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        v -= A[static_cast<std::size_t>(i) * n + k] *
             A[static_cast<std::size_t>(j) * n + k];
      A[static_cast<std::size_t>(i) * n + j] = v / d;
    }
  }
  // L y = b, then L^T x = y.
  for (int i = 0; i < n; ++i) {
    long double v = b[i];
    for (int k = 0; k < i; ++k)
      v -= A[static_cast<std::size_t>(i) * n + k] * b[k];
    b[i] = v / A[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    long double v = b[i];
    for (int k = i + 1; k < n; ++k)
      v -= A[static_cast<std::size_t>(k) * n + i] * b[k];
    b[i] = v / A[static_cast<std::size_t>(i) * n + i];
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = static_cast<double>(b[i]);
  return out;
}

void dcf_normal_equations_reference(const DcfModel& m,
                                    std::vector<long double>& A,
                                    std::vector<long double>& b) {
  const int n = m.unknowns();
  const int kf = m.config().kernel;
  const int d = m.config().reduced_channels;
  const int pad = (kf - 1) / 2;
  A.assign(static_cast<std::size_t>(n) * n, 0.0L);
  b.assign(n, 0.0L);
  std::vector<long double> patch(n);
  for (const DcfSample& s : m.samples()) {
    for (int py = 0; py < s.z.h; ++py)
      for (int px = 0; px < s.z.w; ++px) {
        for (int ky = 0; ky < kf; ++ky)
          for (int kx = 0; kx < kf; ++kx)
            for (int i = 0; i < d; ++i) {
              const int iy = py - pad + ky;
              const int ix = px - pad + kx;
              const bool in_range =
                  iy >= 0 && iy < s.z.h && ix >= 0 && ix < s.z.w;
              patch[(static_cast<std::size_t>(ky) * kf + kx) * d + i] =
                  in_range ? static_cast<long double>(s.z.at(iy, ix, i)) : 0.0L;
            }
        const long double yv = s.y.at(py, px, 0);
        for (int a = 0; a < n; ++a) {
          for (int bj = 0; bj < n; ++bj)
            A[static_cast<std::size_t>(a) * n + bj] +=
                s.weight * patch[a] * patch[bj];
          b[a] += s.weight * yv * patch[a];
        }
      }
  }
  for (int i = 0; i < n; ++i)
    A[static_cast<std::size_t>(i) * n + i] += m.config().lambda;
}

std::vector<double> dcf_dense_solution_reference(const DcfModel& m) {
  std::vector<long double> A, b;
  dcf_normal_equations_reference(m, A, b);
  return spd_solve_reference(std::move(A), std::move(b), m.unknowns());
}

FeatureMap dcf_dual_response_reference(const FeatureMap& z,
                                       const FeatureMap& y, double lambda) {
  const int npos = z.pixels();
  std::vector<long double> K(static_cast<std::size_t>(npos) * npos);
  for (int p = 0; p < npos; ++p)
    for (int q = 0; q < npos; ++q) {
      long double acc = 0.0L;
      const double* zp = z.data.data() + static_cast<std::size_t>(p) * z.c;
      const double* zq = z.data.data() + static_cast<std::size_t>(q) * z.c;
      for (int i = 0; i < z.c; ++i)
        acc += static_cast<long double>(zp[i]) * zq[i];
      K[static_cast<std::size_t>(p) * npos + q] = acc;
    }
  std::vector<long double> Kreg = K;
  for (int p = 0; p < npos; ++p)
    Kreg[static_cast<std::size_t>(p) * npos + p] += lambda;
  std::vector<long double> rhs(npos);
  for (int p = 0; p < npos; ++p) rhs[p] = y.data[p];
  const std::vector<double> alpha =
      spd_solve_reference(std::move(Kreg), std::move(rhs), npos);
  FeatureMap out(z.h, z.w, 1);
  for (int p = 0; p < npos; ++p) {
    long double acc = 0.0L;
    for (int q = 0; q < npos; ++q)
      acc += K[static_cast<std::size_t>(p) * npos + q] * alpha[q];
    out.data[p] = static_cast<double>(acc);
  }
  return out;
}

std::vector<Decision> filter_decisions_reference(
    const std::vector<double>& peaks, int max_length, double hard_threshold) {
  std::vector<Decision> out;
  std::vector<double> window;
  for (const double peak : peaks) {
    const double u =
        peak > 1e-6 ? 1.0 / peak : hard_threshold + 1.0;
    Decision d = Decision::kPreserved;
    if (u > hard_threshold) {
      d = Decision::kRemoved;
    } else if (!window.empty()) {
      double sum = 0.0;
      for (double v : window) sum += v;
      if (u > sum / static_cast<double>(window.size())) d = Decision::kRemoved;
    }
    out.push_back(d);
    window.push_back(u);
    if (static_cast<int>(window.size()) > max_length)
      window.erase(window.begin());
  }
  return out;
}

FeatureMap bilinear_reference(const FeatureMap& in, int oh, int ow) {
  FeatureMap out(oh, ow, in.c);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int ch = 0; ch < in.c; ++ch) {
        long double sy = (oy + 0.5L) * in.h / oh - 0.5L;
        long double sx = (ox + 0.5L) * in.w / ow - 0.5L;
        sy = std::clamp(sy, 0.0L, static_cast<long double>(in.h - 1));
        sx = std::clamp(sx, 0.0L, static_cast<long double>(in.w - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int x0 = static_cast<int>(std::floor(sx));
        const int y1 = std::min(y0 + 1, in.h - 1);
        const int x1 = std::min(x0 + 1, in.w - 1);
        const long double ty = sy - y0;
        const long double tx = sx - x0;
        const long double v =
            (1 - ty) * ((1 - tx) * in.at(y0, x0, ch) + tx * in.at(y0, x1, ch)) +
            ty * ((1 - tx) * in.at(y1, x0, ch) + tx * in.at(y1, x1, ch));
        out.at(oy, ox, ch) = static_cast<double>(v);
      }
  return out;
}

double loss_reference(const MaskPair& pred, const MaskPair& label,
                      double lambda_iou, double bce_eps) {
  const std::size_t n = pred.fg.data.size();
  const long double eps = bce_eps;
  long double bce = 0.0L, inter = 0.0L, uni = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double p = pred.fg.data[i];
    const long double y = label.fg.data[i];
    bce -= y * std::log(std::min(p + eps, 1.0L)) +
           (1.0L - y) * std::log(std::min(1.0L - p + eps, 1.0L));
    inter += p * y;
    uni += p + y - p * y;
  }
  bce /= static_cast<long double>(n);
  return static_cast<double>(bce +
                             lambda_iou * (1.0L - inter / (uni + eps)));
}

namespace {

std::vector<std::array<int, 2>> boundary_pixels_reference(const MaskPair& m,
                                                          double threshold) {
  auto inside = [&](int y, int x) {
    if (y < 0 || y >= m.h() || x < 0 || x >= m.w()) return false;
    return m.fg.at(y, x, 0) >= threshold;
  };
  std::vector<std::array<int, 2>> out;
  for (int y = 0; y < m.h(); ++y)
    for (int x = 0; x < m.w(); ++x) {
      if (!inside(y, x)) continue;
      if (!inside(y - 1, x) || !inside(y + 1, x) || !inside(y, x - 1) ||
          !inside(y, x + 1)) {
        out.push_back({y, x});
      }
    }
  return out;
}

double matched_fraction_reference(const std::vector<std::array<int, 2>>& src,
                                  const std::vector<std::array<int, 2>>& dst,
                                  int tol) {
  long matched = 0;
  for (const auto& s : src) {
    for (const auto& d : dst) {
      if (std::abs(s[0] - d[0]) <= tol && std::abs(s[1] - d[1]) <= tol) {
        ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(src.size());
}

}  // namespace

double contour_fmeasure_reference(const MaskPair& pred, const MaskPair& gt,
                                  double threshold, int tolerance_px) {
  const auto pb = boundary_pixels_reference(pred, threshold);
  const auto gb = boundary_pixels_reference(gt, threshold);
  if (pb.empty() && gb.empty()) return 1.0;
  if (pb.empty() || gb.empty()) return 0.0;
  const double p = matched_fraction_reference(pb, gb, tolerance_px);
  const double r = matched_fraction_reference(gb, pb, tolerance_px);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double min_rect_area_sweep_reference(
    const std::vector<std::array<double, 2>>& pts, int n_angles) {
  constexpr long double kQuarter = 1.57079632679489661923L;
  long double best = std::numeric_limits<long double>::infinity();
  for (int a = 0; a < n_angles; ++a) {
    const long double ang = kQuarter * a / n_angles;
    const long double c = std::cos(ang);
    const long double s = std::sin(ang);
    long double min_u = std::numeric_limits<long double>::infinity();
    long double max_u = -min_u;
    long double min_v = min_u;
    long double max_v = -min_u;
    for (const auto& p : pts) {
      const long double u = c * p[0] + s * p[1];
      const long double v = -s * p[0] + c * p[1];
      min_u = std::min(min_u, u);
      max_u = std::max(max_u, u);
      min_v = std::min(min_v, v);
      max_v = std::max(max_v, v);
    }
    best = std::min(best, (max_u - min_u + 1.0L) * (max_v - min_v + 1.0L));
  }
  return static_cast<double>(best);
}

}  // namespace samtrack::oracle

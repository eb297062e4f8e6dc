#include "samtrack/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "samtrack/errors.hpp"

namespace samtrack {

namespace {

struct PadAmount {
  int out = 0;
  int before = 0;
};

PadAmount pad_for(int in, int k, int stride, Pad pad) {
  PadAmount p;
  if (pad == Pad::kSame) {
    p.out = (in + stride - 1) / stride;
    const int total = std::max(0, (p.out - 1) * stride + k - in);
    p.before = total / 2;
  } else {
    if (k > in) throw StateError("conv2d: kernel larger than input");
    p.out = (in - k) / stride + 1;
    p.before = 0;
  }
  return p;
}

}  // namespace

double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

FeatureMap conv2d(const FeatureMap& in, const ConvWeights& k, int stride,
                  Pad pad) {
  if (in.c != k.ic) throw StateError("conv2d: channel mismatch");
  if (stride < 1) throw StateError("conv2d: bad stride");
  const PadAmount py = pad_for(in.h, k.kh, stride, pad);
  const PadAmount px = pad_for(in.w, k.kw, stride, pad);

  FeatureMap out(py.out, px.out, k.oc);

  // Per-tap weight matrices transposed to [in][out] so the inner update is a
  // unit-stride fma over output channels.
  std::vector<double> wt(static_cast<std::size_t>(k.kh) * k.kw * k.ic * k.oc);
  for (int ky = 0; ky < k.kh; ++ky)
    for (int kx = 0; kx < k.kw; ++kx) {
      double* t = wt.data() +
                  (static_cast<std::size_t>(ky) * k.kw + kx) * k.ic * k.oc;
      for (int o = 0; o < k.oc; ++o) {
        const double* src = k.taps(o, ky, kx);
        for (int i = 0; i < k.ic; ++i) t[i * k.oc + o] = src[i];
      }
    }

  for (int oy = 0; oy < out.h; ++oy) {
    for (int ox = 0; ox < out.w; ++ox) {
      double* dst = out.ptr(oy, ox);
      for (int o = 0; o < k.oc; ++o) dst[o] = k.bias[o];
    }
    for (int ky = 0; ky < k.kh; ++ky) {
      const int iy = oy * stride - py.before + ky;
      if (iy < 0 || iy >= in.h) continue;
      for (int kx = 0; kx < k.kw; ++kx) {
        // Output columns whose sampled input column stays in range.
        const int shift = px.before - kx;
        const int ox0 = shift <= 0 ? 0 : (shift + stride - 1) / stride;
        const int hi = in.w - 1 + shift;
        if (hi < 0) continue;
        const int ox1 = std::min(hi / stride, out.w - 1);
        const double* t =
            wt.data() +
            (static_cast<std::size_t>(ky) * k.kw + kx) * k.ic * k.oc;
        for (int ox = ox0; ox <= ox1; ++ox) {
          const double* src = in.ptr(iy, ox * stride - px.before + kx);
          double* dst = out.ptr(oy, ox);
          for (int i = 0; i < k.ic; ++i) {
            const double v = src[i];
            const double* row = t + static_cast<std::size_t>(i) * k.oc;
            for (int o = 0; o < k.oc; ++o) dst[o] += v * row[o];
          }
        }
      }
    }
  }
  return out;
}

void relu_inplace(FeatureMap& m) {
  for (double& v : m.data) v = v > 0.0 ? v : 0.0;
}

FeatureMap bilinear_resize(const FeatureMap& in, int oh, int ow) {
  if (oh < 1 || ow < 1) throw StateError("bilinear_resize: bad output size");
  FeatureMap out(oh, ow, in.c);
  std::vector<int> x0(ow), x1(ow);
  std::vector<double> tx(ow);
  for (int ox = 0; ox < ow; ++ox) {
    double sx = (ox + 0.5) * static_cast<double>(in.w) / ow - 0.5;
    sx = std::clamp(sx, 0.0, static_cast<double>(in.w - 1));
    x0[ox] = static_cast<int>(sx);
    x1[ox] = std::min(x0[ox] + 1, in.w - 1);
    tx[ox] = sx - x0[ox];
  }
  for (int oy = 0; oy < oh; ++oy) {
    double sy = (oy + 0.5) * static_cast<double>(in.h) / oh - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(in.h - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, in.h - 1);
    const double ty = sy - y0;
    for (int ox = 0; ox < ow; ++ox) {
      const double* p00 = in.ptr(y0, x0[ox]);
      const double* p01 = in.ptr(y0, x1[ox]);
      const double* p10 = in.ptr(y1, x0[ox]);
      const double* p11 = in.ptr(y1, x1[ox]);
      double* dst = out.ptr(oy, ox);
      const double t = tx[ox];
      for (int ch = 0; ch < in.c; ++ch) {
        const double top = p00[ch] + (p01[ch] - p00[ch]) * t;
        const double bot = p10[ch] + (p11[ch] - p10[ch]) * t;
        dst[ch] = top + (bot - top) * ty;
      }
    }
  }
  return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  if (a.h != b.h || a.w != b.w)
    throw StateError("concat_channels: spatial mismatch");
  FeatureMap out(a.h, a.w, a.c + b.c);
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x) {
      double* dst = out.ptr(y, x);
      const double* pa = a.ptr(y, x);
      const double* pb = b.ptr(y, x);
      std::copy(pa, pa + a.c, dst);
      std::copy(pb, pb + b.c, dst + a.c);
    }
  return out;
}

ConvWeights seeded_conv(SplitMix64& g, int oc, int ic, int kh, int kw,
                        double gain) {
  ConvWeights k(oc, ic, kh, kw);
  const double bound = gain * std::sqrt(3.0 / (static_cast<double>(ic) * kh * kw));
  for (int o = 0; o < oc; ++o)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        double* t = k.taps(o, ky, kx);
        for (int i = 0; i < ic; ++i) t[i] = g.uniform(-bound, bound);
      }
  return k;
}

void check_finite(const double* p, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i]))
      throw NumericError(std::string(what) + ": non-finite value");
}

void check_finite(const FeatureMap& m, const char* what) {
  check_finite(m.data.data(), m.data.size(), what);
}

}  // namespace samtrack

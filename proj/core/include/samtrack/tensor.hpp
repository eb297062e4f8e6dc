#pragma once

#include <cstddef>
#include <vector>

#include "samtrack/rng.hpp"

namespace samtrack {

// Dense row-major (height, width, channels) map of doubles. The channel
// vector at a pixel is contiguous, which keeps attention dot products and
// 1x1 convolutions on unit stride.
struct FeatureMap {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h_, int w_, int c_)
      : h(h_), w(w_), c(c_),
        data(static_cast<std::size_t>(h_) * w_ * c_, 0.0) {}

  double& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  double* ptr(int y, int x) {
    return data.data() + (static_cast<std::size_t>(y) * w + x) * c;
  }
  const double* ptr(int y, int x) const {
    return data.data() + (static_cast<std::size_t>(y) * w + x) * c;
  }

  int pixels() const { return h * w; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const FeatureMap& o) const {
    return h == o.h && w == o.w && c == o.c;
  }
  void fill(double v) { data.assign(data.size(), v); }
};

// Convolution weights laid out [out][ky][kx][in]; the in-channel run is
// contiguous to pair with FeatureMap pixels.
struct ConvWeights {
  int oc = 0;
  int ic = 0;
  int kh = 0;
  int kw = 0;
  std::vector<double> w;
  std::vector<double> bias;

  ConvWeights() = default;
  ConvWeights(int oc_, int ic_, int kh_, int kw_)
      : oc(oc_), ic(ic_), kh(kh_), kw(kw_),
        w(static_cast<std::size_t>(oc_) * ic_ * kh_ * kw_, 0.0),
        bias(static_cast<std::size_t>(oc_), 0.0) {}

  double* taps(int o, int ky, int kx) {
    return w.data() + ((static_cast<std::size_t>(o) * kh + ky) * kw + kx) * ic;
  }
  const double* taps(int o, int ky, int kx) const {
    return w.data() + ((static_cast<std::size_t>(o) * kh + ky) * kw + kx) * ic;
  }
};

enum class Pad { kSame, kValid };

// kSame pads so out = ceil(in / stride), split with the smaller half before
// (pad_before = total / 2, rounded down). kValid requires kernel <= input.
FeatureMap conv2d(const FeatureMap& in, const ConvWeights& k, int stride,
                  Pad pad);

void relu_inplace(FeatureMap& m);

// Half-pixel-center sampling, source coordinates clamped to the input rect.
// Identity when output size equals input size.
FeatureMap bilinear_resize(const FeatureMap& in, int oh, int ow);

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

// Fixed blocked summation order: deterministic bit for bit across runs.
double dot(const double* a, const double* b, int n);

// Uniform(-gain*sqrt(3/fan_in), +gain*sqrt(3/fan_in)) weights, zero bias.
// Fill order is out, ky, kx, in.
ConvWeights seeded_conv(SplitMix64& g, int oc, int ic, int kh, int kw,
                        double gain = 1.0);

// Throws NumericError naming `what` if any element is NaN or infinite.
void check_finite(const FeatureMap& m, const char* what);
void check_finite(const double* p, std::size_t n, const char* what);

}  // namespace samtrack

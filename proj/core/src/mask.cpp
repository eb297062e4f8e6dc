#include "samtrack/mask.hpp"

#include <cmath>
#include <stdexcept>

namespace samtrack {

MaskPair mask_from_probabilities(const FeatureMap& m) {
  if (m.c != 1)
    throw std::invalid_argument("mask_from_probabilities: one channel expected");
  MaskPair out;
  out.fg = m;
  out.bg = FeatureMap(m.h, m.w, 1);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (m.data[i] < 0.0 || m.data[i] > 1.0)
      throw std::invalid_argument("mask_from_probabilities: value outside [0,1]");
    out.bg.data[i] = 1.0 - m.data[i];
  }
  return out;
}

MaskPair mask_from_logits(const FeatureMap& logits) {
  if (logits.c != 2)
    throw std::invalid_argument("mask_from_logits: two channels expected");
  MaskPair out;
  out.fg = FeatureMap(logits.h, logits.w, 1);
  out.bg = FeatureMap(logits.h, logits.w, 1);
  for (int p = 0; p < logits.pixels(); ++p) {
    const double a = logits.data[static_cast<std::size_t>(p) * 2];
    const double b = logits.data[static_cast<std::size_t>(p) * 2 + 1];
    const double m = a > b ? a : b;
    const double ea = std::exp(a - m);
    const double eb = std::exp(b - m);
    const double inv = 1.0 / (ea + eb);
    out.fg.data[p] = ea * inv;
    out.bg.data[p] = eb * inv;
  }
  return out;
}

FeatureMap binarize(const FeatureMap& probabilities, double threshold) {
  if (probabilities.c != 1)
    throw std::invalid_argument("binarize: one channel expected");
  FeatureMap out(probabilities.h, probabilities.w, 1);
  for (std::size_t i = 0; i < probabilities.data.size(); ++i)
    out.data[i] = probabilities.data[i] >= threshold ? 1.0 : 0.0;
  return out;
}

}  // namespace samtrack

#pragma once

#include "samtrack/tensor.hpp"

namespace samtrack {

// Foreground/background probability pair; fg + bg = 1 per pixel.
struct MaskPair {
  FeatureMap fg;  // (h, w, 1)
  FeatureMap bg;  // (h, w, 1)

  int h() const { return fg.h; }
  int w() const { return fg.w; }
};

// fg = m, bg = 1 - m. Input values must lie in [0, 1].
MaskPair mask_from_probabilities(const FeatureMap& m);

// Per-pixel two-way softmax over a 2-channel logit map (fg first).
MaskPair mask_from_logits(const FeatureMap& logits);

// fg >= threshold.
FeatureMap binarize(const FeatureMap& probabilities, double threshold);

}  // namespace samtrack

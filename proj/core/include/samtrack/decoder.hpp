#pragma once

#include <cstdint>
#include <vector>

#include "samtrack/mask.hpp"
#include "samtrack/tensor.hpp"

namespace samtrack {

enum class PosencMode { kAdd, kConcat };

struct DecoderBlock {
  ConvWeights conv;
  bool learnable = false;
};

// Fixed inventory: fusion conv 3x3, residual block (conv-clamp-conv + skip)
// at feature resolution, two upsample stages (3x3 conv, 1x1 merge of one
// encoder skip added in, bilinear 2x), a second residual block between them,
// final 1x1 two-channel projection. The first stage merges the mid tap at
// feature resolution, the second merges the stem tap at half resolution, so
// logits land at twice the stem's dims. Only fusion and projection are
// learnable.
struct DecoderParams {
  int base_channels = 0;
  PosencMode posenc = PosencMode::kAdd;
  DecoderBlock fusion;   // 3x3, (C | C+1) -> C
  DecoderBlock res1_a;   // 3x3, C -> C
  DecoderBlock res1_b;   // 3x3, C -> C
  DecoderBlock up1;      // 3x3, C -> C/4
  DecoderBlock merge1;   // 1x1, mid channels -> C/4
  DecoderBlock res2_a;   // 3x3, C/4 -> C/4
  DecoderBlock res2_b;   // 3x3, C/4 -> C/4
  DecoderBlock up2;      // 3x3, C/4 -> C/8
  DecoderBlock merge2;   // 1x1, stem channels -> C/8
  DecoderBlock proj;     // 1x1, C/8 -> 2

  std::size_t parameter_count() const;
  std::size_t learnable_parameter_count() const;
};

// stem_channels is the half-resolution stem tap's width, mid_channels the
// feature-resolution mid tap's. C must be divisible by 8.
DecoderParams make_decoder(int base_channels, int stem_channels,
                           int mid_channels, PosencMode posenc,
                           std::uint64_t seed);

struct DecoderInputs {
  FeatureMap fused;                // (hf, wf, C) at feature resolution
  std::vector<FeatureMap> skips;   // [stem at half res, mid at feature res]
};

// Spatial map broadcast into the readout: added across channels, or
// appended as one extra channel. The map is bilinearly resized to the
// readout's dims when they differ.
FeatureMap positional_fuse(const FeatureMap& readout,
                           const FeatureMap& spatial_map, PosencMode mode);

// Pre-softmax 2-channel logits at twice the stem skip's dims.
FeatureMap decode_logits(const DecoderParams& params, const FeatureMap& fused,
                         const std::vector<FeatureMap>& skips);

MaskPair decode(const DecoderParams& params, const FeatureMap& fused,
                const std::vector<FeatureMap>& skips);

struct LossCfg {
  double lambda_iou = 1.0;
  double bce_eps = 1e-7;
};

// Mean binary cross-entropy on the fg channel plus lambda_iou times the
// soft IoU complement 1 - sum(p*y) / (sum(p + y - p*y) + eps).
double loss(const MaskPair& pred, const MaskPair& label, const LossCfg& cfg);

// Analytic d(loss)/d(fg probability), per pixel.
FeatureMap loss_grad(const MaskPair& pred, const MaskPair& label,
                     const LossCfg& cfg);

struct FitReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int steps_taken = 0;
  int accepted_steps = 0;
  std::vector<double> loss_trace;  // after each accepted step
};

// Plain gradient descent on the learnable blocks against init_mask.
// Steps that would increase the loss are rejected and halve the rate;
// fitting stops early once the rate or the improvement becomes negligible.
FitReport fit_first_frame(DecoderParams& params, const DecoderInputs& inputs,
                          const MaskPair& init_mask, int steps = 100,
                          double lr = 0.05, const LossCfg& cfg = LossCfg{});

}  // namespace samtrack

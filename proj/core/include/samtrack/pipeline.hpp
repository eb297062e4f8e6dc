#pragma once

#include <cstdint>

#include "samtrack/dcf.hpp"
#include "samtrack/decoder.hpp"
#include "samtrack/encoder.hpp"
#include "samtrack/geometry.hpp"
#include "samtrack/mask.hpp"
#include "samtrack/memory_bank.hpp"
#include "samtrack/sample_filter.hpp"
#include "samtrack/tensor.hpp"

namespace samtrack {

struct TrackerConfig {
  std::uint64_t seed = 1;
  int base_channels = 32;
  int stride = 4;
  BankConfig bank;
  DcfConfig dcf;
  int queue_length = 30;
  double hard_threshold = 10.0;
  LossCfg loss;
  int fit_steps = 100;
  double fit_lr = 0.05;
  double binarize_threshold = 0.5;
  PosencMode posenc = PosencMode::kAdd;
};

struct TrackResult {
  MaskPair mask;
  AxisBox axis_box;
  RotatedBox rotated_box;
  double uncertainty = 0.0;
  bool preserved = false;
  double spatial_peak = 0.0;
  // Set when a numeric error forced the fail-safe path: the mask and boxes
  // are carried over from the previous frame and nothing was absorbed.
  bool fail_safe = false;
};

struct TrackerState {
  TrackerConfig config;
  EncoderParams encoder;
  DecoderParams decoder;
  MemoryBank bank;
  DcfModel dcf;
  UncertaintyQueue queue;
  long frame_count = 0;
  int frame_h = 0;
  int frame_w = 0;
  TrackResult last;
};

// Box-to-segmentation bootstrap: the filled box acts as a provisional mask
// for decoder fitting and memory seeding, one decode pass clipped to the box
// region yields the first pseudo-mask, and its embedding replaces the
// box-mask entry.
TrackerState init_from_box(const TrackerConfig& config,
                           const FeatureMap& frame, const AxisBox& box);

// Direct initialization from a mask at frame resolution; no bootstrap pass.
TrackerState init_from_mask(const TrackerConfig& config,
                            const FeatureMap& frame, const MaskPair& mask);

// One tracking step: encode, attention read, spatial evaluate, decide,
// decode, box fit; preserved frames feed both memories. Numeric errors are
// absorbed into a removed-equivalent result that reuses the previous mask.
TrackResult step(TrackerState& state, const FeatureMap& frame);

}  // namespace samtrack

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "samtrack/mask.hpp"
#include "samtrack/tensor.hpp"

namespace samtrack {

enum class TargetShape { kEllipse, kPolygon };
enum class OccluderShape { kRectangle, kDisc };

struct OccluderSpec {
  OccluderShape shape = OccluderShape::kRectangle;
  double half_w = 14.0;
  double half_h = 14.0;
  double opacity = 1.0;
  int entry_frame = 0;
  int duration = 0;
  std::array<double, 3> color = {0.35, 0.35, 0.4};
  // When aimed, the occluder crosses the target's center mid-duration;
  // otherwise center/velocity are absolute frame coordinates.
  bool aim_at_target = true;
  std::array<double, 2> center = {0.0, 0.0};
  std::array<double, 2> velocity = {2.0, 0.0};
};

struct SceneSpec {
  int frame_h = 128;
  int frame_w = 128;

  TargetShape target_shape = TargetShape::kEllipse;
  double target_rx = 18.0;
  double target_ry = 12.0;
  int polygon_sides = 5;
  std::array<double, 3> target_color = {0.85, 0.55, 0.25};

  std::array<double, 2> start = {64.0, 64.0};  // (cx, cy)
  std::array<double, 2> velocity = {0.0, 0.0};
  std::array<double, 2> wobble_amp = {0.0, 0.0};
  double wobble_period = 24.0;

  double deform_cycles = 0.0;
  double deform_amp = 0.0;
  double deform_speed = 0.3;  // contour phase advance per frame, radians

  std::vector<OccluderSpec> occluders;

  double brightness_slope = 0.0;
  double noise_sigma = 0.0;
  double texture_contrast = 0.25;
  std::uint64_t texture_seed = 1;

  int frames = 60;
  std::uint64_t master_seed = 1;
};

struct SequenceSample {
  std::vector<FeatureMap> frames;  // (h, w, 3), values in [0, 1]
  std::vector<MaskPair> gt_masks;  // binary
  std::vector<bool> occluded;      // an occluder overlaps the target
};

// Target center at frame t, after the keep-inside clamp.
std::array<double, 2> target_center(const SceneSpec& spec, int t);

// Deterministic render of the whole sequence. Occluders are drawn over the
// target but never into the ground-truth masks. Throws ConfigError when the
// target cannot keep a 2 pixel margin from the frame bounds.
SequenceSample generate(const SceneSpec& spec);

}  // namespace samtrack

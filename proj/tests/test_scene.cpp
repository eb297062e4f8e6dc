#include "samtrack/scene.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include "samtrack/errors.hpp"

namespace samtrack {
namespace {

bool same_map(const FeatureMap& a, const FeatureMap& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data.data(), b.data.data(),
                     a.size() * sizeof(double)) == 0;
}

bool same_mask(const MaskPair& a, const MaskPair& b) {
  return same_map(a.fg, b.fg) && same_map(a.bg, b.bg);
}

SceneSpec moving_spec() {
  SceneSpec spec;
  spec.start = {40.0, 60.0};
  spec.velocity = {0.8, -0.4};
  spec.wobble_amp = {3.0, 2.0};
  spec.deform_cycles = 3.0;
  spec.deform_amp = 0.15;
  spec.noise_sigma = 0.02;
  spec.frames = 24;
  return spec;
}

TEST(Scene, SameSpecRendersBitIdentically) {
  const SceneSpec spec = moving_spec();
  const SequenceSample a = generate(spec);
  const SequenceSample b = generate(spec);
  ASSERT_EQ(a.frames.size(), 24u);
  ASSERT_EQ(a.gt_masks.size(), 24u);
  ASSERT_EQ(a.occluded.size(), 24u);
  for (int t = 0; t < 24; ++t) {
    EXPECT_TRUE(same_map(a.frames[t], b.frames[t])) << "frame " << t;
    EXPECT_TRUE(same_mask(a.gt_masks[t], b.gt_masks[t])) << "mask " << t;
  }
}

TEST(Scene, StaticSceneKeepsMasksAndFramesIdentical) {
  SceneSpec spec;
  spec.frames = 10;
  const SequenceSample s = generate(spec);
  for (int t = 1; t < 10; ++t) {
    EXPECT_TRUE(same_mask(s.gt_masks[0], s.gt_masks[t])) << t;
    EXPECT_TRUE(same_map(s.frames[0], s.frames[t])) << t;
    EXPECT_FALSE(s.occluded[t]);
  }
  long area = 0;
  for (double v : s.gt_masks[0].fg.data) area += v > 0.5;
  EXPECT_GT(area, 200);
}

TEST(Scene, MasksIgnoreRenderSeedAndNoise) {
  SceneSpec a = moving_spec();
  SceneSpec b = moving_spec();
  b.master_seed = 999;
  const SequenceSample sa = generate(a);
  const SequenceSample sb = generate(b);
  bool any_frame_differs = false;
  for (int t = 0; t < a.frames; ++t) {
    EXPECT_TRUE(same_mask(sa.gt_masks[t], sb.gt_masks[t])) << t;
    any_frame_differs = any_frame_differs || !same_map(sa.frames[t], sb.frames[t]);
  }
  EXPECT_TRUE(any_frame_differs);
}

TEST(Scene, OpaqueOccluderPixelsEqualItsColorExactly) {
  SceneSpec spec;
  spec.frames = 8;
  OccluderSpec occ;
  occ.opacity = 1.0;
  occ.entry_frame = 4;
  occ.duration = 2;
  occ.velocity = {0.0, 0.0};
  occ.color = {0.1, 0.9, 0.3};
  spec.occluders.push_back(occ);
  const SequenceSample s = generate(spec);

  EXPECT_TRUE(s.occluded[4]);
  EXPECT_TRUE(s.occluded[5]);
  EXPECT_FALSE(s.occluded[3]);
  EXPECT_FALSE(s.occluded[6]);

  const auto c = target_center(spec, 4);
  int checked = 0;
  for (int y = 0; y < spec.frame_h; ++y) {
    for (int x = 0; x < spec.frame_w; ++x) {
      if (std::abs(x - c[0]) <= occ.half_w && std::abs(y - c[1]) <= occ.half_h) {
        EXPECT_EQ(s.frames[4].at(y, x, 0), 0.1);
        EXPECT_EQ(s.frames[4].at(y, x, 1), 0.9);
        EXPECT_EQ(s.frames[4].at(y, x, 2), 0.3);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 400);
}

TEST(Scene, OccludersNeverTouchGroundTruth) {
  SceneSpec with = moving_spec();
  with.noise_sigma = 0.0;
  OccluderSpec occ;
  occ.entry_frame = 5;
  occ.duration = 10;
  with.occluders.push_back(occ);
  SceneSpec without = with;
  without.occluders.clear();

  const SequenceSample sw = generate(with);
  const SequenceSample so = generate(without);
  for (int t = 0; t < with.frames; ++t) {
    EXPECT_TRUE(same_mask(sw.gt_masks[t], so.gt_masks[t])) << t;
  }
  bool any_occluded = false;
  for (bool f : sw.occluded) any_occluded = any_occluded || f;
  EXPECT_TRUE(any_occluded);
}

TEST(Scene, TargetClampedInsideFrameMargins) {
  SceneSpec spec = moving_spec();
  spec.velocity = {6.0, 5.0};
  spec.frames = 40;
  const SequenceSample s = generate(spec);
  for (int t = 0; t < spec.frames; ++t) {
    const MaskPair& m = s.gt_masks[t];
    long area = 0;
    for (int y = 0; y < m.h(); ++y) {
      for (int x = 0; x < m.w(); ++x) {
        if (m.fg.at(y, x, 0) > 0.5) {
          ++area;
          EXPECT_GE(y, 2);
          EXPECT_GE(x, 2);
          EXPECT_LE(y, m.h() - 3);
          EXPECT_LE(x, m.w() - 3);
        }
      }
    }
    EXPECT_GT(area, 0) << t;
  }
}

TEST(Scene, FrameValuesStayInUnitRange) {
  SceneSpec spec = moving_spec();
  spec.brightness_slope = 0.01;
  spec.noise_sigma = 0.1;
  const SequenceSample s = generate(spec);
  for (const FeatureMap& f : s.frames) {
    for (double v : f.data) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Scene, PolygonTargetRenders) {
  SceneSpec spec;
  spec.target_shape = TargetShape::kPolygon;
  spec.polygon_sides = 5;
  spec.frames = 3;
  const SequenceSample s = generate(spec);
  long area = 0;
  for (double v : s.gt_masks[0].fg.data) area += v > 0.5;
  // A polygon inscribed in the ellipse is smaller than the ellipse itself.
  SceneSpec ell = spec;
  ell.target_shape = TargetShape::kEllipse;
  long ell_area = 0;
  for (double v : generate(ell).gt_masks[0].fg.data) ell_area += v > 0.5;
  EXPECT_GT(area, 200);
  EXPECT_LT(area, ell_area);
}

TEST(Scene, OversizedTargetThrows) {
  SceneSpec spec;
  spec.target_rx = 70.0;
  EXPECT_THROW(generate(spec), ConfigError);
  SceneSpec bad;
  bad.deform_amp = 2.0;
  EXPECT_THROW(generate(bad), ConfigError);
}

}  // namespace
}  // namespace samtrack

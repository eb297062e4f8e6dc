#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "samtrack/encoder.hpp"
#include "samtrack/errors.hpp"
#include "samtrack/rng.hpp"

namespace samtrack {
namespace {

FeatureMap seeded_frame(int h, int w, std::uint64_t seed) {
  SplitMix64 g(seed);
  FeatureMap f(h, w, 3);
  for (double& v : f.data) v = g.uniform();
  return f;
}

MaskPair disk_mask(int h, int w, double cy, double cx, double r) {
  FeatureMap m(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m.at(y, x, 0) =
          (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r ? 1.0 : 0.0;
  return mask_from_probabilities(m);
}

bool same_bits(const ConvWeights& a, const ConvWeights& b) {
  return a.w.size() == b.w.size() &&
         std::memcmp(a.w.data(), b.w.data(), a.w.size() * sizeof(double)) ==
             0 &&
         std::memcmp(a.bias.data(), b.bias.data(),
                     a.bias.size() * sizeof(double)) == 0;
}

bool same_bits(const FeatureMap& a, const FeatureMap& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data.data(), b.data.data(),
                     a.data.size() * sizeof(double)) == 0;
}

TEST(InitEncoder, SameSeedIsByteIdentical) {
  const EncoderParams a = init_encoder(7);
  const EncoderParams b = init_encoder(7);
  EXPECT_TRUE(same_bits(a.frame_stem, b.frame_stem));
  EXPECT_TRUE(same_bits(a.fg_stem, b.fg_stem));
  EXPECT_TRUE(same_bits(a.bg_stem, b.bg_stem));
  EXPECT_TRUE(same_bits(a.b1, b.b1));
  EXPECT_TRUE(same_bits(a.b2, b.b2));
  EXPECT_TRUE(same_bits(a.b3, b.b3));
  EXPECT_TRUE(same_bits(a.key_head, b.key_head));
  EXPECT_TRUE(same_bits(a.value_head, b.value_head));
  EXPECT_TRUE(same_bits(a.query_head, b.query_head));
  EXPECT_TRUE(same_bits(a.qvalue_head, b.qvalue_head));
  const EncoderParams c = init_encoder(8);
  EXPECT_FALSE(same_bits(a.b1, c.b1));
}

TEST(InitEncoder, HeadChannelRatios) {
  const EncoderParams p = init_encoder(1, 32, 4);
  EXPECT_EQ(4, p.key_head.oc);
  EXPECT_EQ(16, p.value_head.oc);
  EXPECT_EQ(4, p.query_head.oc);
  EXPECT_EQ(16, p.qvalue_head.oc);
}

TEST(InitEncoder, RejectsBadConfig) {
  EXPECT_THROW(init_encoder(1, 30, 4), ConfigError);
  EXPECT_THROW(init_encoder(1, 0, 4), ConfigError);
  EXPECT_THROW(init_encoder(1, 32, 3), ConfigError);
  EXPECT_THROW(init_encoder(1, 32, 0), ConfigError);
}

TEST(InitEncoder, CraftedFirstFilters) {
  const EncoderParams p = init_encoder(3, 32, 4);
  FeatureMap frame(16, 16, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) frame.at(y, x, 0) = 0.01 * x;
  const FeatureMap stem = conv2d(frame, p.frame_stem, 2, Pad::kSame);
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 6; ++x) {
      // out ch 0: identity on input ch 0; kernel center lands on (2y+1, 2x+1)
      EXPECT_NEAR(0.01 * (2 * x + 1), stem.at(y, x, 0), 1e-12);
      // out ch 3: horizontal gradient on input ch 0
      EXPECT_NEAR(0.02, stem.at(y, x, 3), 1e-12);
      // out ch 6: vertical gradient, zero on an x-ramp
      EXPECT_NEAR(0.0, stem.at(y, x, 6), 1e-12);
      // out ch 9: box blur equals the ramp at the window center
      EXPECT_NEAR(0.01 * (2 * x + 1), stem.at(y, x, 9), 1e-12);
      // crafted channels ignore the other input channels
      EXPECT_NEAR(0.0, stem.at(y, x, 1), 1e-12);
      EXPECT_NEAR(0.0, stem.at(y, x, 2), 1e-12);
    }
}

TEST(EncodeMemory, DeterministicAndShaped) {
  const EncoderParams p = init_encoder(5, 32, 4);
  const FeatureMap frame = seeded_frame(64, 64, 9);
  const MaskPair mask = disk_mask(64, 64, 32, 32, 12);
  const Embedding a = encode_memory(p, frame, mask);
  const Embedding b = encode_memory(p, frame, mask);
  EXPECT_EQ(16, a.key.h);
  EXPECT_EQ(16, a.key.w);
  EXPECT_EQ(4, a.key.c);
  EXPECT_EQ(16, a.value.h);
  EXPECT_EQ(16, a.value.w);
  EXPECT_EQ(16, a.value.c);
  EXPECT_TRUE(same_bits(a.key, b.key));
  EXPECT_TRUE(same_bits(a.value, b.value));
}

TEST(EncodeMemory, MaskSwapChangesEmbedding) {
  const EncoderParams p = init_encoder(5, 32, 4);
  const FeatureMap frame = seeded_frame(64, 64, 10);
  const MaskPair mask = disk_mask(64, 64, 30, 34, 10);
  MaskPair swapped;
  swapped.fg = mask.bg;
  swapped.bg = mask.fg;
  const Embedding a = encode_memory(p, frame, mask);
  const Embedding b = encode_memory(p, frame, swapped);
  double dist = 0.0;
  for (std::size_t i = 0; i < a.value.data.size(); ++i) {
    const double d = a.value.data[i] - b.value.data[i];
    dist += d * d;
  }
  EXPECT_GT(std::sqrt(dist), 1e-3);
}

TEST(EncodeMemory, RejectsBadInputs) {
  const EncoderParams p = init_encoder(5, 32, 4);
  const FeatureMap frame = seeded_frame(64, 64, 11);
  EXPECT_THROW(encode_memory(p, frame, disk_mask(32, 32, 16, 16, 8)),
               std::invalid_argument);
  FeatureMap bad(64, 64, 2);
  MaskPair mask = disk_mask(64, 64, 32, 32, 8);
  EXPECT_THROW(encode_memory(p, bad, mask), std::invalid_argument);
  mask.fg.at(0, 0, 0) = 1.5;
  EXPECT_THROW(encode_memory(p, frame, mask), std::invalid_argument);
}

TEST(EncodeQuery, ShapesAndSkips) {
  const EncoderParams p = init_encoder(5, 32, 4);
  const FeatureMap frame = seeded_frame(64, 64, 12);
  const QueryFeatures q = encode_query(p, frame);
  EXPECT_EQ(16, q.query.h);
  EXPECT_EQ(16, q.query.w);
  EXPECT_EQ(4, q.query.c);
  EXPECT_EQ(16, q.query_value.c);
  ASSERT_EQ(2u, q.skips.size());
  EXPECT_EQ(32, q.skips[0].h);
  EXPECT_EQ(16, q.skips[0].c);
  EXPECT_EQ(16, q.skips[1].h);
  EXPECT_EQ(32, q.skips[1].c);
  EXPECT_EQ(32, q.features.c);
  EXPECT_EQ(16, q.features.h);
}

TEST(EncodeQuery, QueryDimsMatchMemoryKey) {
  const EncoderParams p = init_encoder(6, 32, 4);
  for (const int size : {48, 64, 100}) {
    const FeatureMap frame = seeded_frame(size, size, 20 + size);
    const QueryFeatures q = encode_query(p, frame);
    const Embedding m =
        encode_memory(p, frame, disk_mask(size, size, size / 2, size / 2, 8));
    EXPECT_EQ(m.key.h, q.query.h);
    EXPECT_EQ(m.key.w, q.query.w);
    EXPECT_EQ(size / 4, q.query.h);
  }
}

TEST(EncodeQuery, CeilShapeOnOddDims) {
  const EncoderParams p = init_encoder(6, 32, 4);
  FeatureMap frame(65, 63, 3);
  frame.fill(0.25);
  const QueryFeatures q = encode_query(p, frame);
  EXPECT_EQ(17, q.query.h);
  EXPECT_EQ(16, q.query.w);
}

TEST(EncodeQuery, ZeroFrameStaysFinite) {
  const EncoderParams p = init_encoder(6, 32, 4);
  FeatureMap frame(32, 32, 3);
  const QueryFeatures q = encode_query(p, frame);
  for (const double v : q.query.data) EXPECT_TRUE(std::isfinite(v));
  for (const double v : q.features.data) EXPECT_TRUE(std::isfinite(v));
}

// With dead mask stems and aliased heads, the memory path must reproduce the
// query path bit for bit: the frame stem and backbone are one computation.
TEST(SharedBackbone, MemoryPathEqualsQueryPath) {
  EncoderParams p = init_encoder(9, 32, 4);
  p.fg_stem = ConvWeights(16, 1, 3, 3);
  p.bg_stem = ConvWeights(16, 1, 3, 3);
  p.query_head = p.key_head;
  p.qvalue_head = p.value_head;
  const FeatureMap frame = seeded_frame(64, 64, 30);
  const MaskPair mask = disk_mask(64, 64, 32, 32, 9);
  const QueryFeatures q = encode_query(p, frame);
  const Embedding m = encode_memory(p, frame, mask);
  EXPECT_TRUE(same_bits(q.query, m.key));
  EXPECT_TRUE(same_bits(q.query_value, m.value));
}

TEST(EncoderParams, ParameterCountMatchesLayout) {
  const EncoderParams p = init_encoder(1, 32, 4);
  const std::size_t stems = (16ull * 3 * 9 + 16) + 2 * (16ull * 1 * 9 + 16);
  const std::size_t backbone =
      (32ull * 16 * 9 + 32) + 2 * (32ull * 32 * 9 + 32);
  const std::size_t heads = 2 * (4ull * 32 + 4) + 2 * (16ull * 32 + 16);
  EXPECT_EQ(stems + backbone + heads, p.parameter_count());
}

}  // namespace
}  // namespace samtrack

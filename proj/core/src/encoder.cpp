#include "samtrack/encoder.hpp"

#include <stdexcept>
#include <utility>

#include "samtrack/errors.hpp"
#include "samtrack/rng.hpp"

namespace samtrack {

namespace {

// Clamped layers halve activation energy; sqrt(2) per layer restores it.
// The attention head gain then sets the key/query dot-product spread: tuned
// on synthetic scenes so per-query softmax logits spread with std around 3,
// peaked enough to localize without saturating.
constexpr double kBackboneGain = 1.4142135623730951;
constexpr double kAttentionHeadGain = 5.0;

void craft_first_filters(ConvWeights& stem) {
  struct Tap {
    int ky, kx;
    double v;
  };
  // identity, horizontal gradient, vertical gradient, box blur
  const std::vector<std::vector<Tap>> kinds = {
      {{1, 1, 1.0}},
      {{1, 0, -1.0}, {1, 2, 1.0}},
      {{0, 1, -1.0}, {2, 1, 1.0}},
      {{0, 0, 1.0 / 9}, {0, 1, 1.0 / 9}, {0, 2, 1.0 / 9},
       {1, 0, 1.0 / 9}, {1, 1, 1.0 / 9}, {1, 2, 1.0 / 9},
       {2, 0, 1.0 / 9}, {2, 1, 1.0 / 9}, {2, 2, 1.0 / 9}}};
  int o = 0;
  for (const auto& taps : kinds)
    for (int in = 0; in < stem.ic && o < stem.oc; ++in, ++o) {
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
          for (int i = 0; i < stem.ic; ++i) stem.taps(o, ky, kx)[i] = 0.0;
      for (const Tap& t : taps) stem.taps(o, t.ky, t.kx)[in] = t.v;
    }
}

struct BackboneOut {
  FeatureMap features;
  FeatureMap mid;
};

BackboneOut run_backbone(const EncoderParams& p, const FeatureMap& stem) {
  BackboneOut out;
  FeatureMap x = conv2d(stem, p.b1, p.stride / 2, Pad::kSame);
  relu_inplace(x);
  FeatureMap mid = conv2d(x, p.b2, 1, Pad::kSame);
  relu_inplace(mid);
  out.features = conv2d(mid, p.b3, 1, Pad::kSame);
  relu_inplace(out.features);
  out.mid = std::move(mid);
  return out;
}

void validate_frame(const FeatureMap& frame) {
  if (frame.c != 3)
    throw std::invalid_argument("encoder: frame must have 3 channels");
  if (frame.h < 2 || frame.w < 2)
    throw std::invalid_argument("encoder: frame too small");
}

}  // namespace

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const ConvWeights* c : {&frame_stem, &fg_stem, &bg_stem, &b1, &b2, &b3,
                               &key_head, &value_head, &query_head,
                               &qvalue_head})
    n += c->w.size() + c->bias.size();
  return n;
}

EncoderParams init_encoder(std::uint64_t seed, int base_channels, int stride) {
  if (base_channels < 8 || base_channels % 8 != 0)
    throw ConfigError("encoder: base channels must be a positive multiple of 8");
  if (stride < 2 || stride % 2 != 0)
    throw ConfigError("encoder: stride must be a positive even number");

  const int c = base_channels;
  EncoderParams p;
  p.seed = seed;
  p.base_channels = c;
  p.stride = stride;

  SplitMix64 g(seed);
  p.frame_stem = seeded_conv(g, c / 2, 3, 3, 3);
  craft_first_filters(p.frame_stem);
  p.fg_stem = seeded_conv(g, c / 2, 1, 3, 3);
  p.bg_stem = seeded_conv(g, c / 2, 1, 3, 3);
  p.b1 = seeded_conv(g, c, c / 2, 3, 3, kBackboneGain);
  p.b2 = seeded_conv(g, c, c, 3, 3, kBackboneGain);
  p.b3 = seeded_conv(g, c, c, 3, 3, kBackboneGain);
  p.key_head = seeded_conv(g, c / 8, c, 1, 1, kAttentionHeadGain);
  p.value_head = seeded_conv(g, c / 2, c, 1, 1);
  p.query_head = seeded_conv(g, c / 8, c, 1, 1, kAttentionHeadGain);
  p.qvalue_head = seeded_conv(g, c / 2, c, 1, 1);
  return p;
}

Embedding encode_memory(const EncoderParams& params, const FeatureMap& frame,
                        const MaskPair& mask) {
  validate_frame(frame);
  if (mask.h() != frame.h || mask.w() != frame.w || mask.fg.c != 1 ||
      mask.bg.c != 1)
    throw std::invalid_argument("encoder: mask/frame dim mismatch");
  for (std::size_t i = 0; i < mask.fg.data.size(); ++i)
    if (mask.fg.data[i] < 0.0 || mask.fg.data[i] > 1.0 ||
        mask.bg.data[i] < 0.0 || mask.bg.data[i] > 1.0)
      throw std::invalid_argument("encoder: mask probabilities outside [0,1]");

  FeatureMap stem = conv2d(frame, params.frame_stem, 2, Pad::kSame);
  const FeatureMap fg = conv2d(mask.fg, params.fg_stem, 2, Pad::kSame);
  const FeatureMap bg = conv2d(mask.bg, params.bg_stem, 2, Pad::kSame);
  for (std::size_t i = 0; i < stem.data.size(); ++i)
    stem.data[i] += fg.data[i] + bg.data[i];

  const BackboneOut b = run_backbone(params, stem);
  Embedding e;
  e.key = conv2d(b.features, params.key_head, 1, Pad::kSame);
  e.value = conv2d(b.features, params.value_head, 1, Pad::kSame);
  check_finite(e.key, "memory key");
  check_finite(e.value, "memory value");
  return e;
}

QueryFeatures encode_query(const EncoderParams& params,
                           const FeatureMap& frame) {
  validate_frame(frame);
  FeatureMap stem = conv2d(frame, params.frame_stem, 2, Pad::kSame);
  BackboneOut b = run_backbone(params, stem);

  QueryFeatures q;
  q.query = conv2d(b.features, params.query_head, 1, Pad::kSame);
  q.query_value = conv2d(b.features, params.qvalue_head, 1, Pad::kSame);
  check_finite(q.query, "query");
  check_finite(q.query_value, "query value");
  check_finite(b.features, "backbone features");
  q.skips.push_back(std::move(stem));
  q.skips.push_back(std::move(b.mid));
  q.features = std::move(b.features);
  return q;
}

}  // namespace samtrack

#pragma once

#include <cstdint>
#include <vector>

#include "samtrack/mask.hpp"
#include "samtrack/tensor.hpp"

namespace samtrack {

// Deterministic feature extractor standing in for a pretrained backbone.
// One stride-2 stem (plus mask stems summed in on the memory path) feeds a
// three-layer clamped backbone; 1x1 heads project keys, values, queries and
// query values. The stem and backbone weights are shared by both paths.
struct EncoderParams {
  std::uint64_t seed = 1;
  int base_channels = 32;  // C, divisible by 8
  int stride = 4;          // total downsampling s, even

  ConvWeights frame_stem;   // 3x3, 3 -> C/2, stride 2
  ConvWeights fg_stem;      // 3x3, 1 -> C/2, stride 2
  ConvWeights bg_stem;      // 3x3, 1 -> C/2, stride 2
  ConvWeights b1;           // 3x3, C/2 -> C, stride s/2
  ConvWeights b2;           // 3x3, C -> C, mid tap
  ConvWeights b3;           // 3x3, C -> C
  ConvWeights key_head;     // 1x1, C -> C/8
  ConvWeights value_head;   // 1x1, C -> C/2
  ConvWeights query_head;   // 1x1, C -> C/8
  ConvWeights qvalue_head;  // 1x1, C -> C/2

  std::size_t parameter_count() const;
};

struct Embedding {
  FeatureMap key;    // (h/s, w/s, C/8)
  FeatureMap value;  // (h/s, w/s, C/2)
};

struct QueryFeatures {
  FeatureMap query;               // (h/s, w/s, C/8)
  FeatureMap query_value;         // (h/s, w/s, C/2)
  std::vector<FeatureMap> skips;  // [stem at h/2, mid tap at h/s]
  FeatureMap features;            // backbone output, feeds the spatial filter
};

// Seeded weights with fixed fan-in scaling. The stem's first output channels
// carry hand-crafted filters (identity, horizontal and vertical gradient,
// box blur, each per input channel) so features are structured from the
// start.
EncoderParams init_encoder(std::uint64_t seed, int base_channels = 32,
                           int stride = 4);

// Frame plus fg/bg probability maps, stems summed before the backbone.
Embedding encode_memory(const EncoderParams& params, const FeatureMap& frame,
                        const MaskPair& mask);

QueryFeatures encode_query(const EncoderParams& params,
                           const FeatureMap& frame);

}  // namespace samtrack

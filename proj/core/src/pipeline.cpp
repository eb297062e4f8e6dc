#include "samtrack/pipeline.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "samtrack/errors.hpp"
#include "samtrack/rng.hpp"

namespace samtrack {

namespace {

TrackerState make_state(const TrackerConfig& config, int frame_h,
                        int frame_w) {
  return TrackerState{
      config,
      init_encoder(derive_stream(config.seed, 0xE17C), config.base_channels,
                   config.stride),
      make_decoder(config.base_channels, config.base_channels / 2,
                   config.base_channels, config.posenc,
                   derive_stream(config.seed, 0xDEC0)),
      MemoryBank(config.bank),
      DcfModel(config.dcf, config.base_channels,
               derive_stream(config.seed, 0xDCF0)),
      UncertaintyQueue(config.queue_length, config.hard_threshold),
      0,
      frame_h,
      frame_w,
      TrackResult{}};
}

MaskPair make_box_mask(int h, int w, const AxisBox& box) {
  MaskPair m{FeatureMap(h, w, 1), FeatureMap(h, w, 1)};
  m.bg.fill(1.0);
  for (int y = box.y; y < box.y + box.h; ++y) {
    for (int x = box.x; x < box.x + box.w; ++x) {
      m.fg.at(y, x, 0) = 1.0;
      m.bg.at(y, x, 0) = 0.0;
    }
  }
  return m;
}

// Decoder output lives at twice the stem tap's dims, one pixel past odd
// frame extents; crop back (top-left aligned). Padding for the fit target is
// the inverse, background-filled.
MaskPair crop_mask(MaskPair m, int h, int w) {
  if (m.h() == h && m.w() == w) return m;
  MaskPair out{FeatureMap(h, w, 1), FeatureMap(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.fg.at(y, x, 0) = m.fg.at(y, x, 0);
      out.bg.at(y, x, 0) = m.bg.at(y, x, 0);
    }
  }
  return out;
}

MaskPair pad_mask(const MaskPair& m, int h, int w) {
  if (m.h() == h && m.w() == w) return m;
  MaskPair out{FeatureMap(h, w, 1), FeatureMap(h, w, 1)};
  out.bg.fill(1.0);
  for (int y = 0; y < m.h(); ++y) {
    for (int x = 0; x < m.w(); ++x) {
      out.fg.at(y, x, 0) = m.fg.at(y, x, 0);
      out.bg.at(y, x, 0) = m.bg.at(y, x, 0);
    }
  }
  return out;
}

double to_feature_coord(double pixel, int stride) {
  return (pixel + 0.5) / stride - 0.5;
}

// The online filter's response amplitude is whatever least squares gives it,
// typically well under the label peak of 1. Rescaling the map to a fixed peak
// keeps the positional signal's strength independent of filter fit quality;
// the raw map is still what uncertainty is measured on. Degenerate maps
// (peak at or below zero) are passed through untouched. The peak value is
// tuned on synthetic scenes: high enough that the first-frame fit converges
// within its default step budget, low enough that appearance evidence still
// decides the mask boundary.
constexpr double kPosencPeak = 2.0;

FeatureMap peak_normalized(const FeatureMap& spatial, const MapPeak& peak) {
  FeatureMap out = spatial;
  if (peak.value > 1e-6)
    for (double& v : out.data) v = v / peak.value * kPosencPeak;
  return out;
}

void validate_frame(const FeatureMap& frame) {
  if (frame.c != 3 || frame.h < 2 || frame.w < 2) {
    throw std::invalid_argument("tracker: frame must be (h, w, 3)");
  }
}

// Shared by both init paths: seed the bank and the spatial filter, fit the
// decoder on the seed mask, and leave the init-frame decode inputs behind
// for the bootstrap pass.
struct InitContext {
  QueryFeatures qf;
  FeatureMap spatial;
  MapPeak peak;
  DecoderInputs decoder_inputs;
};

InitContext init_common(TrackerState& st, const FeatureMap& frame,
                        const MaskPair& seed_mask, bool box_mode,
                        double center_row, double center_col) {
  InitContext ctx;
  ctx.qf = encode_query(st.encoder, frame);

  Embedding emb = encode_memory(st.encoder, frame, seed_mask);
  st.bank.write(0, std::move(emb.key), std::move(emb.value), true, box_mode);

  const double fy = to_feature_coord(center_row, st.config.stride);
  const double fx = to_feature_coord(center_col, st.config.stride);
  const FeatureMap label =
      st.dcf.make_label(ctx.qf.features.h, ctx.qf.features.w, fy, fx);
  st.dcf.update(ctx.qf.features, label);

  ctx.spatial = st.dcf.evaluate(ctx.qf.features);
  ctx.peak = find_peak(ctx.spatial);

  FeatureMap readout =
      concat_channels(ctx.qf.query_value, st.bank.read(ctx.qf.query));
  ctx.decoder_inputs = DecoderInputs{
      positional_fuse(readout, peak_normalized(ctx.spatial, ctx.peak),
                      st.config.posenc),
      ctx.qf.skips};

  const int dec_h = 2 * ctx.qf.skips[0].h;
  const int dec_w = 2 * ctx.qf.skips[0].w;
  const MaskPair target = pad_mask(seed_mask, dec_h, dec_w);
  fit_first_frame(st.decoder, ctx.decoder_inputs, target, st.config.fit_steps,
                  st.config.fit_lr, st.config.loss);
  return ctx;
}

void finish_init(TrackerState& st, MaskPair mask, const AxisBox& fallback_axis,
                 const InitContext& ctx) {
  TrackResult res;
  try {
    const BoxPair boxes = mask_to_boxes(mask, st.config.binarize_threshold);
    res.axis_box = boxes.axis;
    res.rotated_box = boxes.rotated;
  } catch (const EmptyMaskError&) {
    res.axis_box = fallback_axis;
    res.rotated_box =
        RotatedBox{fallback_axis.x + fallback_axis.w / 2.0,
                   fallback_axis.y + fallback_axis.h / 2.0,
                   static_cast<double>(fallback_axis.w),
                   static_cast<double>(fallback_axis.h), 0.0};
  }
  res.mask = std::move(mask);
  res.uncertainty = st.queue.uncertainty(ctx.spatial);
  res.preserved = true;
  res.spatial_peak = ctx.peak.value;
  st.queue.push(res.uncertainty);
  st.last = std::move(res);
  st.frame_count = 1;
}

}  // namespace

TrackerState init_from_box(const TrackerConfig& config,
                           const FeatureMap& frame, const AxisBox& box) {
  validate_frame(frame);
  if (box.w < 1 || box.h < 1 || box.x < 0 || box.y < 0 ||
      box.x + box.w > frame.w || box.y + box.h > frame.h) {
    throw std::invalid_argument("init_from_box: degenerate box");
  }

  TrackerState st = make_state(config, frame.h, frame.w);
  const MaskPair seed = make_box_mask(frame.h, frame.w, box);
  const double cy = box.y + (box.h - 1) / 2.0;
  const double cx = box.x + (box.w - 1) / 2.0;
  const InitContext ctx = init_common(st, frame, seed, true, cy, cx);

  // Bootstrap: one decode pass, clipped to the box region, replaces the
  // box-mask embedding with a real segmentation embedding.
  MaskPair pseudo = crop_mask(
      decode(st.decoder, ctx.decoder_inputs.fused, ctx.decoder_inputs.skips),
      frame.h, frame.w);
  for (int y = 0; y < frame.h; ++y) {
    for (int x = 0; x < frame.w; ++x) {
      if (y < box.y || y >= box.y + box.h || x < box.x ||
          x >= box.x + box.w) {
        pseudo.fg.at(y, x, 0) = 0.0;
        pseudo.bg.at(y, x, 0) = 1.0;
      }
    }
  }
  Embedding emb = encode_memory(st.encoder, frame, pseudo);
  st.bank.replace_box_mask_entry(emb.key, emb.value);

  finish_init(st, std::move(pseudo), box, ctx);
  return st;
}

TrackerState init_from_mask(const TrackerConfig& config,
                            const FeatureMap& frame, const MaskPair& mask) {
  validate_frame(frame);
  if (mask.h() != frame.h || mask.w() != frame.w) {
    throw std::invalid_argument("init_from_mask: mask dims differ from frame");
  }

  TrackerState st = make_state(config, frame.h, frame.w);
  double cy = 0.0, cx = 0.0;
  try {
    std::tie(cy, cx) = centroid(mask, st.config.binarize_threshold);
  } catch (const EmptyMaskError&) {
    throw std::invalid_argument("init_from_mask: empty mask");
  }
  const InitContext ctx = init_common(st, frame, mask, false, cy, cx);

  const AxisBox fallback{static_cast<int>(cx), static_cast<int>(cy), 1, 1};
  finish_init(st, mask, fallback, ctx);
  return st;
}

TrackResult step(TrackerState& state, const FeatureMap& frame) {
  if (frame.h != state.frame_h || frame.w != state.frame_w || frame.c != 3) {
    throw std::invalid_argument("step: frame dims differ from init frame");
  }
  const long t = state.frame_count;
  TrackResult result;
  try {
    const QueryFeatures qf = encode_query(state.encoder, frame);
    FeatureMap readout =
        concat_channels(qf.query_value, state.bank.read(qf.query));
    const FeatureMap spatial = state.dcf.evaluate(qf.features);
    const MapPeak peak = find_peak(spatial);
    const double u = state.queue.uncertainty(spatial);
    const Decision decision = state.queue.decide(u);
    const FeatureMap fused = positional_fuse(
        readout, peak_normalized(spatial, peak), state.config.posenc);
    MaskPair mask = crop_mask(decode(state.decoder, fused, qf.skips),
                              state.frame_h, state.frame_w);

    result.uncertainty = u;
    result.spatial_peak = peak.value;
    result.preserved = decision == Decision::kPreserved;

    bool empty_mask = false;
    try {
      const BoxPair boxes =
          mask_to_boxes(mask, state.config.binarize_threshold);
      result.axis_box = boxes.axis;
      result.rotated_box = boxes.rotated;
    } catch (const EmptyMaskError&) {
      empty_mask = true;
      result.axis_box = state.last.axis_box;
      result.rotated_box = state.last.rotated_box;
    }

    state.queue.push(u);
    if (result.preserved) {
      Embedding emb = encode_memory(state.encoder, frame, mask);
      state.bank.write(t, std::move(emb.key), std::move(emb.value), true);
      double fy = peak.y, fx = peak.x;
      if (!empty_mask) {
        const auto [row, col] =
            centroid(mask, state.config.binarize_threshold);
        fy = to_feature_coord(row, state.config.stride);
        fx = to_feature_coord(col, state.config.stride);
      }
      const FeatureMap label =
          state.dcf.make_label(spatial.h, spatial.w, fy, fx);
      state.dcf.update(qf.features, label);
    }
    result.mask = std::move(mask);
  } catch (const NumericError&) {
    result.mask = state.last.mask;
    result.axis_box = state.last.axis_box;
    result.rotated_box = state.last.rotated_box;
    result.uncertainty = state.config.hard_threshold + 1.0;
    result.preserved = false;
    result.spatial_peak = 0.0;
    result.fail_safe = true;
    state.queue.push(result.uncertainty);
  }
  state.frame_count = t + 1;
  state.last = result;
  return result;
}

}  // namespace samtrack

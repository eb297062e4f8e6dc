#include "samtrack/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "samtrack/errors.hpp"

namespace samtrack {

namespace {

std::size_t block_params(const DecoderBlock& b) {
  return b.conv.w.size() + b.conv.bias.size();
}

// Input gradient of a stride-1 same-padded odd-kernel convolution: convolve
// the output gradient with the spatially flipped, channel-transposed kernel.
FeatureMap conv_input_grad(const FeatureMap& gout, const ConvWeights& k) {
  ConvWeights t(k.ic, k.oc, k.kh, k.kw);
  for (int o = 0; o < k.oc; ++o)
    for (int ky = 0; ky < k.kh; ++ky)
      for (int kx = 0; kx < k.kw; ++kx) {
        const double* src = k.taps(o, ky, kx);
        for (int i = 0; i < k.ic; ++i)
          t.taps(i, k.kh - 1 - ky, k.kw - 1 - kx)[o] = src[i];
      }
  return conv2d(gout, t, 1, Pad::kSame);
}

void conv_weight_grad(const FeatureMap& input, const FeatureMap& gout,
                      const ConvWeights& shape, ConvWeights& wgrad) {
  wgrad = ConvWeights(shape.oc, shape.ic, shape.kh, shape.kw);
  const int pad_y = (shape.kh - 1) / 2;
  const int pad_x = (shape.kw - 1) / 2;
  for (int py = 0; py < gout.h; ++py)
    for (int px = 0; px < gout.w; ++px) {
      const double* gp = gout.ptr(py, px);
      for (int o = 0; o < shape.oc; ++o) wgrad.bias[o] += gp[o];
      for (int ky = 0; ky < shape.kh; ++ky) {
        const int iy = py - pad_y + ky;
        if (iy < 0 || iy >= input.h) continue;
        for (int kx = 0; kx < shape.kw; ++kx) {
          const int ix = px - pad_x + kx;
          if (ix < 0 || ix >= input.w) continue;
          const double* ip = input.ptr(iy, ix);
          for (int o = 0; o < shape.oc; ++o) {
            const double go = gp[o];
            if (go == 0.0) continue;
            double* wt = wgrad.taps(o, ky, kx);
            for (int i = 0; i < shape.ic; ++i) wt[i] += go * ip[i];
          }
        }
      }
    }
}

// Adjoint of bilinear_resize: scatter each output gradient onto the four
// source corners with the forward interpolation weights.
FeatureMap bilinear_adjoint(const FeatureMap& gout, int ih, int iw) {
  FeatureMap gin(ih, iw, gout.c);
  for (int oy = 0; oy < gout.h; ++oy) {
    double sy = (oy + 0.5) * static_cast<double>(ih) / gout.h - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(ih - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, ih - 1);
    const double ty = sy - y0;
    for (int ox = 0; ox < gout.w; ++ox) {
      double sx = (ox + 0.5) * static_cast<double>(iw) / gout.w - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(iw - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, iw - 1);
      const double tx = sx - x0;
      const double* g = gout.ptr(oy, ox);
      double* p00 = gin.ptr(y0, x0);
      double* p01 = gin.ptr(y0, x1);
      double* p10 = gin.ptr(y1, x0);
      double* p11 = gin.ptr(y1, x1);
      for (int ch = 0; ch < gout.c; ++ch) {
        p00[ch] += (1.0 - ty) * (1.0 - tx) * g[ch];
        p01[ch] += (1.0 - ty) * tx * g[ch];
        p10[ch] += ty * (1.0 - tx) * g[ch];
        p11[ch] += ty * tx * g[ch];
      }
    }
  }
  return gin;
}

void add_inplace(FeatureMap& a, const FeatureMap& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void relu_backward_inplace(FeatureMap& g, const FeatureMap& pre) {
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (pre.data[i] <= 0.0) g.data[i] = 0.0;
}

struct Trace {
  FeatureMap res1_pre;  // res1 conv_a output before clamping
  FeatureMap res2_pre;  // res2 conv_a output before clamping
  FeatureMap r2;        // projection input at output resolution
};

FeatureMap forward(const DecoderParams& p, const FeatureMap& fused,
                   const std::vector<FeatureMap>& skips, Trace* t) {
  if (skips.size() != 2)
    throw std::invalid_argument("decode: expected two skip maps");
  if (fused.c != p.fusion.conv.ic)
    throw std::invalid_argument("decode: fused channel mismatch");
  if (skips[0].c != p.merge2.conv.ic || skips[1].c != p.merge1.conv.ic)
    throw std::invalid_argument("decode: skip channel mismatch");
  if (skips[1].h != fused.h || skips[1].w != fused.w)
    throw std::invalid_argument("decode: mid skip must match fused dims");

  FeatureMap x1 = conv2d(fused, p.fusion.conv, 1, Pad::kSame);

  FeatureMap a = conv2d(x1, p.res1_a.conv, 1, Pad::kSame);
  FeatureMap a_pre = a;
  relu_inplace(a);
  FeatureMap x2 = conv2d(a, p.res1_b.conv, 1, Pad::kSame);
  add_inplace(x2, x1);

  FeatureMap s1 = conv2d(x2, p.up1.conv, 1, Pad::kSame);
  add_inplace(s1, conv2d(skips[1], p.merge1.conv, 1, Pad::kSame));
  FeatureMap r1 = bilinear_resize(s1, skips[0].h, skips[0].w);

  FeatureMap a2 = conv2d(r1, p.res2_a.conv, 1, Pad::kSame);
  FeatureMap a2_pre = a2;
  relu_inplace(a2);
  FeatureMap x3 = conv2d(a2, p.res2_b.conv, 1, Pad::kSame);
  add_inplace(x3, r1);

  FeatureMap s2 = conv2d(x3, p.up2.conv, 1, Pad::kSame);
  add_inplace(s2, conv2d(skips[0], p.merge2.conv, 1, Pad::kSame));
  FeatureMap r2 = bilinear_resize(s2, skips[0].h * 2, skips[0].w * 2);

  FeatureMap logits = conv2d(r2, p.proj.conv, 1, Pad::kSame);
  check_finite(logits, "decoder logits");

  if (t) {
    t->res1_pre = std::move(a_pre);
    t->res2_pre = std::move(a2_pre);
    t->r2 = std::move(r2);
  }
  return logits;
}

}  // namespace

std::size_t DecoderParams::parameter_count() const {
  return block_params(fusion) + block_params(res1_a) + block_params(res1_b) +
         block_params(up1) + block_params(merge1) + block_params(res2_a) +
         block_params(res2_b) + block_params(up2) + block_params(merge2) +
         block_params(proj);
}

std::size_t DecoderParams::learnable_parameter_count() const {
  std::size_t n = 0;
  for (const DecoderBlock* b : {&fusion, &res1_a, &res1_b, &up1, &merge1,
                                &res2_a, &res2_b, &up2, &merge2, &proj})
    if (b->learnable) n += block_params(*b);
  return n;
}

DecoderParams make_decoder(int base_channels, int stem_channels,
                           int mid_channels, PosencMode posenc,
                           std::uint64_t seed) {
  if (base_channels < 8 || base_channels % 8 != 0)
    throw ConfigError("decoder: base channels must be a positive multiple of 8");
  if (stem_channels < 1 || mid_channels < 1)
    throw ConfigError("decoder: skip channels must be positive");
  const int c = base_channels;
  const int cq = c / 4;
  const int ce = c / 8;
  const int cin = posenc == PosencMode::kConcat ? c + 1 : c;

  SplitMix64 g(seed);
  DecoderParams p;
  p.base_channels = c;
  p.posenc = posenc;
  p.fusion = {seeded_conv(g, c, cin, 3, 3), true};
  p.res1_a = {seeded_conv(g, c, c, 3, 3), false};
  p.res1_b = {seeded_conv(g, c, c, 3, 3), false};
  p.up1 = {seeded_conv(g, cq, c, 3, 3), false};
  p.merge1 = {seeded_conv(g, cq, mid_channels, 1, 1), true};
  p.res2_a = {seeded_conv(g, cq, cq, 3, 3), false};
  p.res2_b = {seeded_conv(g, cq, cq, 3, 3), false};
  p.up2 = {seeded_conv(g, ce, cq, 3, 3), false};
  p.merge2 = {seeded_conv(g, ce, stem_channels, 1, 1), true};
  p.proj = {seeded_conv(g, 2, ce, 1, 1), true};
  return p;
}

FeatureMap positional_fuse(const FeatureMap& readout,
                           const FeatureMap& spatial_map, PosencMode mode) {
  if (spatial_map.c != 1)
    throw std::invalid_argument("positional_fuse: spatial map needs one channel");
  const FeatureMap* m = &spatial_map;
  FeatureMap resized;
  if (spatial_map.h != readout.h || spatial_map.w != readout.w) {
    resized = bilinear_resize(spatial_map, readout.h, readout.w);
    m = &resized;
  }
  if (mode == PosencMode::kConcat) return concat_channels(readout, *m);
  FeatureMap out = readout;
  for (int p = 0; p < out.pixels(); ++p) {
    const double v = m->data[p];
    double* dst = out.data.data() + static_cast<std::size_t>(p) * out.c;
    for (int ch = 0; ch < out.c; ++ch) dst[ch] += v;
  }
  return out;
}

FeatureMap decode_logits(const DecoderParams& params, const FeatureMap& fused,
                         const std::vector<FeatureMap>& skips) {
  return forward(params, fused, skips, nullptr);
}

MaskPair decode(const DecoderParams& params, const FeatureMap& fused,
                const std::vector<FeatureMap>& skips) {
  return mask_from_logits(forward(params, fused, skips, nullptr));
}

double loss(const MaskPair& pred, const MaskPair& label, const LossCfg& cfg) {
  if (!(cfg.lambda_iou >= 0.0)) throw ConfigError("loss: lambda_iou >= 0");
  if (!(cfg.bce_eps > 0.0)) throw ConfigError("loss: bce_eps > 0");
  if (!pred.fg.same_shape(label.fg))
    throw std::invalid_argument("loss: dim mismatch");
  const std::size_t n = pred.fg.data.size();
  const double eps = cfg.bce_eps;
  double bce = 0.0, inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pred.fg.data[i];
    const double y = label.fg.data[i];
    // log arguments capped at 1 so saturated pixels contribute exactly zero
    // and the loss stays non-negative.
    bce -= y * std::log(std::min(p + eps, 1.0)) +
           (1.0 - y) * std::log(std::min(1.0 - p + eps, 1.0));
    inter += p * y;
    uni += p + y - p * y;
  }
  bce /= static_cast<double>(n);
  const double iou = 1.0 - inter / (uni + eps);
  return bce + cfg.lambda_iou * iou;
}

FeatureMap loss_grad(const MaskPair& pred, const MaskPair& label,
                     const LossCfg& cfg) {
  if (!(cfg.lambda_iou >= 0.0)) throw ConfigError("loss: lambda_iou >= 0");
  if (!(cfg.bce_eps > 0.0)) throw ConfigError("loss: bce_eps > 0");
  if (!pred.fg.same_shape(label.fg))
    throw std::invalid_argument("loss_grad: dim mismatch");
  const std::size_t n = pred.fg.data.size();
  const double eps = cfg.bce_eps;
  double inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pred.fg.data[i];
    const double y = label.fg.data[i];
    inter += p * y;
    uni += p + y - p * y;
  }
  const double u = uni + eps;
  FeatureMap g(pred.fg.h, pred.fg.w, 1);
  const double invn = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pred.fg.data[i];
    const double y = label.fg.data[i];
    const double dfg = p + eps < 1.0 ? y / (p + eps) : 0.0;
    const double dbg = 1.0 - p + eps < 1.0 ? (1.0 - y) / (1.0 - p + eps) : 0.0;
    const double dbce = -(dfg - dbg) * invn;
    const double diou = -(y * u - inter * (1.0 - y)) / (u * u);
    g.data[i] = dbce + cfg.lambda_iou * diou;
  }
  return g;
}

FitReport fit_first_frame(DecoderParams& params, const DecoderInputs& inputs,
                          const MaskPair& init_mask, int steps, double lr,
                          const LossCfg& cfg) {
  if (steps < 0) throw std::invalid_argument("fit: steps >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("fit: lr > 0");
  if (inputs.skips.size() != 2)
    throw std::invalid_argument("fit: expected two skip maps");
  if (init_mask.fg.h != inputs.skips[0].h * 2 ||
      init_mask.fg.w != inputs.skips[0].w * 2)
    throw std::invalid_argument("fit: init mask must be at frame resolution");
  for (const DecoderBlock* b : {&params.res1_a, &params.res1_b, &params.up1,
                                &params.res2_a, &params.res2_b, &params.up2})
    if (b->learnable)
      throw StateError("fit: residual and upsampling blocks are fixed");
  if (!params.fusion.learnable || !params.proj.learnable)
    throw StateError("fit: fusion and projection must be learnable");

  FitReport rep;
  if (steps == 0) return rep;

  Trace t;
  FeatureMap logits = forward(params, inputs.fused, inputs.skips, &t);
  MaskPair pred = mask_from_logits(logits);
  double cur = loss(pred, init_mask, cfg);
  rep.initial_loss = cur;

  int stale = 0;
  double rate = lr;
  for (int step = 0; step < steps; ++step) {
    if (rate < lr * 1e-6) break;
    ++rep.steps_taken;

    const FeatureMap gfg = loss_grad(pred, init_mask, cfg);
    FeatureMap glog(gfg.h, gfg.w, 2);
    for (int px = 0; px < gfg.pixels(); ++px) {
      const double s = gfg.data[px] * pred.fg.data[px] * pred.bg.data[px];
      glog.data[static_cast<std::size_t>(px) * 2] = s;
      glog.data[static_cast<std::size_t>(px) * 2 + 1] = -s;
    }

    ConvWeights proj_g;
    conv_weight_grad(t.r2, glog, params.proj.conv, proj_g);

    const FeatureMap gr2 = conv_input_grad(glog, params.proj.conv);
    const FeatureMap gs2 =
        bilinear_adjoint(gr2, inputs.skips[0].h, inputs.skips[0].w);
    ConvWeights merge2_g;
    if (params.merge2.learnable)
      conv_weight_grad(inputs.skips[0], gs2, params.merge2.conv, merge2_g);
    FeatureMap gx3 = conv_input_grad(gs2, params.up2.conv);

    FeatureMap gb2 = conv_input_grad(gx3, params.res2_b.conv);
    relu_backward_inplace(gb2, t.res2_pre);
    FeatureMap gr1 = conv_input_grad(gb2, params.res2_a.conv);
    add_inplace(gr1, gx3);

    const FeatureMap gs1 = bilinear_adjoint(gr1, inputs.fused.h, inputs.fused.w);
    ConvWeights merge1_g;
    if (params.merge1.learnable)
      conv_weight_grad(inputs.skips[1], gs1, params.merge1.conv, merge1_g);
    FeatureMap gx2 = conv_input_grad(gs1, params.up1.conv);

    FeatureMap gb1 = conv_input_grad(gx2, params.res1_b.conv);
    relu_backward_inplace(gb1, t.res1_pre);
    FeatureMap gx1 = conv_input_grad(gb1, params.res1_a.conv);
    add_inplace(gx1, gx2);

    ConvWeights fusion_g;
    conv_weight_grad(inputs.fused, gx1, params.fusion.conv, fusion_g);

    const auto apply = [&](DecoderBlock& b, const ConvWeights& g) {
      if (!b.learnable) return;
      for (std::size_t i = 0; i < g.w.size(); ++i) b.conv.w[i] -= rate * g.w[i];
      for (std::size_t i = 0; i < g.bias.size(); ++i)
        b.conv.bias[i] -= rate * g.bias[i];
    };
    const ConvWeights fusion_old = params.fusion.conv;
    const ConvWeights proj_old = params.proj.conv;
    const ConvWeights merge1_old = params.merge1.conv;
    const ConvWeights merge2_old = params.merge2.conv;
    apply(params.fusion, fusion_g);
    apply(params.proj, proj_g);
    apply(params.merge1, merge1_g);
    apply(params.merge2, merge2_g);

    Trace t_new;
    FeatureMap logits_new;
    double next = 0.0;
    bool blew_up = false;
    try {
      logits_new = forward(params, inputs.fused, inputs.skips, &t_new);
      MaskPair pred_new = mask_from_logits(logits_new);
      next = loss(pred_new, init_mask, cfg);
      if (!std::isfinite(next)) {
        blew_up = true;
      } else if (next <= cur + 1e-12) {
        const double gain = cur - next;
        pred = std::move(pred_new);
        t = std::move(t_new);
        cur = next;
        ++rep.accepted_steps;
        rep.loss_trace.push_back(cur);
        stale = gain <= 1e-9 * std::max(1.0, cur) ? stale + 1 : 0;
        if (stale >= 3) break;
        continue;
      }
    } catch (const NumericError&) {
      blew_up = true;
    }
    params.fusion.conv = fusion_old;
    params.proj.conv = proj_old;
    params.merge1.conv = merge1_old;
    params.merge2.conv = merge2_old;
    if (blew_up) throw NumericError("fit: non-finite loss during descent");
    rate *= 0.5;
  }

  rep.final_loss = cur;
  return rep;
}

}  // namespace samtrack

#include "samtrack/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "samtrack/errors.hpp"
#include "samtrack/rng.hpp"

namespace samtrack {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMargin = 2;

double max_target_radius(const SceneSpec& spec) {
  return std::max(spec.target_rx, spec.target_ry) * (1.0 + spec.deform_amp);
}

void validate(const SceneSpec& spec) {
  if (spec.frame_h < 16 || spec.frame_w < 16) {
    throw ConfigError("scene: frame dims must be at least 16");
  }
  if (spec.frames < 1) throw ConfigError("scene: frame count must be >= 1");
  if (spec.target_rx < 1.0 || spec.target_ry < 1.0) {
    throw ConfigError("scene: target half extents must be >= 1");
  }
  if (spec.polygon_sides < 3) {
    throw ConfigError("scene: polygon needs at least 3 sides");
  }
  if (spec.deform_amp < 0.0 || spec.deform_amp > 0.9) {
    throw ConfigError("scene: deformation amplitude must lie in [0, 0.9]");
  }
  if (spec.deform_cycles < 0.0) {
    throw ConfigError("scene: deformation cycles must be >= 0");
  }
  if (spec.noise_sigma < 0.0) throw ConfigError("scene: noise sigma < 0");
  if (spec.texture_contrast < 0.0 || spec.texture_contrast > 0.5) {
    throw ConfigError("scene: texture contrast must lie in [0, 0.5]");
  }
  if (spec.wobble_period <= 0.0) {
    throw ConfigError("scene: wobble period must be > 0");
  }
  for (const auto& col : {spec.target_color}) {
    for (double v : col) {
      if (v < 0.0 || v > 1.0) {
        throw ConfigError("scene: target color out of [0, 1]");
      }
    }
  }
  for (const auto& occ : spec.occluders) {
    if (occ.half_w < 1.0 || occ.half_h < 1.0) {
      throw ConfigError("scene: occluder half extents must be >= 1");
    }
    if (occ.opacity < 0.0 || occ.opacity > 1.0) {
      throw ConfigError("scene: occluder opacity must lie in [0, 1]");
    }
    if (occ.entry_frame < 0 || occ.duration < 0) {
      throw ConfigError("scene: occluder entry/duration must be >= 0");
    }
    for (double v : occ.color) {
      if (v < 0.0 || v > 1.0) {
        throw ConfigError("scene: occluder color out of [0, 1]");
      }
    }
  }
  const double r = max_target_radius(spec);
  if (kMargin + r > spec.frame_w - 1 - kMargin - r ||
      kMargin + r > spec.frame_h - 1 - kMargin - r) {
    throw ConfigError("scene: target cannot fit inside the frame margins");
  }
}

// Regular n-gon boundary radius at polar angle phi, circumradius 1.
double polygon_radius(double phi, int sides) {
  const double sector = kTwoPi / sides;
  double a = std::fmod(phi, sector);
  if (a < 0.0) a += sector;
  return std::cos(std::numbers::pi / sides) /
         std::cos(a - std::numbers::pi / sides);
}

// Normalized radial position: < 1 is inside the undeformed contour.
double target_rho(const SceneSpec& spec, double cx, double cy, double phase,
                  double x, double y) {
  const double dx = (x - cx) / spec.target_rx;
  const double dy = (y - cy) / spec.target_ry;
  const double rho = std::hypot(dx, dy);
  if (rho < 1e-12) return 0.0;
  const double phi = std::atan2(dy, dx);
  double boundary = spec.target_shape == TargetShape::kPolygon
                        ? polygon_radius(phi, spec.polygon_sides)
                        : 1.0;
  boundary *= 1.0 + spec.deform_amp *
                        std::sin(spec.deform_cycles * phi + phase);
  return rho / boundary;
}

FeatureMap render_background(const SceneSpec& spec) {
  FeatureMap bg(spec.frame_h, spec.frame_w, 3);
  SplitMix64 g(derive_stream(spec.texture_seed, 0xB6));
  for (int ch = 0; ch < 3; ++ch) {
    struct Wave {
      double fx, fy, phase, amp;
    };
    std::array<Wave, 6> waves;
    for (int k = 0; k < 6; ++k) {
      waves[k] = {g.uniform(0.04, 0.35), g.uniform(0.04, 0.35),
                  g.uniform(0.0, kTwoPi), g.uniform(0.3, 1.0) / (k + 1)};
    }
    double peak = 0.0;
    std::vector<double> raw(static_cast<std::size_t>(bg.pixels()));
    for (int y = 0; y < bg.h; ++y) {
      for (int x = 0; x < bg.w; ++x) {
        double v = 0.0;
        for (const Wave& wv : waves) {
          v += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
        }
        raw[static_cast<std::size_t>(y) * bg.w + x] = v;
        peak = std::max(peak, std::abs(v));
      }
    }
    const double scale = peak > 0.0 ? spec.texture_contrast / peak : 0.0;
    for (int y = 0; y < bg.h; ++y) {
      for (int x = 0; x < bg.w; ++x) {
        bg.at(y, x, ch) =
            0.5 + scale * raw[static_cast<std::size_t>(y) * bg.w + x];
      }
    }
  }
  return bg;
}

std::array<double, 2> occluder_center(const SceneSpec& spec,
                                      const OccluderSpec& occ, int t) {
  if (!occ.aim_at_target) {
    return {occ.center[0] + occ.velocity[0] * (t - occ.entry_frame),
            occ.center[1] + occ.velocity[1] * (t - occ.entry_frame)};
  }
  const int mid = occ.entry_frame + occ.duration / 2;
  const auto target = target_center(spec, mid);
  return {target[0] + occ.center[0] + occ.velocity[0] * (t - mid),
          target[1] + occ.center[1] + occ.velocity[1] * (t - mid)};
}

bool inside_occluder(const OccluderSpec& occ, const std::array<double, 2>& c,
                     int x, int y) {
  const double dx = x - c[0];
  const double dy = y - c[1];
  if (occ.shape == OccluderShape::kRectangle) {
    return std::abs(dx) <= occ.half_w && std::abs(dy) <= occ.half_h;
  }
  const double nx = dx / occ.half_w;
  const double ny = dy / occ.half_h;
  return nx * nx + ny * ny <= 1.0;
}

}  // namespace

std::array<double, 2> target_center(const SceneSpec& spec, int t) {
  const double wob = kTwoPi * t / spec.wobble_period;
  double cx = spec.start[0] + spec.velocity[0] * t +
              spec.wobble_amp[0] * std::sin(wob);
  double cy = spec.start[1] + spec.velocity[1] * t +
              spec.wobble_amp[1] * std::cos(wob);
  const double r = max_target_radius(spec);
  if (kMargin + r > spec.frame_w - 1.0 - kMargin - r ||
      kMargin + r > spec.frame_h - 1.0 - kMargin - r) {
    throw ConfigError("scene: target cannot fit inside the frame margins");
  }
  cx = std::clamp(cx, kMargin + r, spec.frame_w - 1.0 - kMargin - r);
  cy = std::clamp(cy, kMargin + r, spec.frame_h - 1.0 - kMargin - r);
  return {cx, cy};
}

SequenceSample generate(const SceneSpec& spec) {
  validate(spec);
  const FeatureMap background = render_background(spec);
  const double reach = max_target_radius(spec) + 1.0;

  SequenceSample out;
  out.frames.reserve(spec.frames);
  out.gt_masks.reserve(spec.frames);
  out.occluded.assign(spec.frames, false);

  for (int t = 0; t < spec.frames; ++t) {
    const auto [cx, cy] = target_center(spec, t);
    const double phase = spec.deform_speed * t;

    FeatureMap frame = background;
    MaskPair mask{FeatureMap(spec.frame_h, spec.frame_w, 1),
                  FeatureMap(spec.frame_h, spec.frame_w, 1)};
    mask.bg.fill(1.0);

    const int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
    const int y1 =
        std::min(spec.frame_h - 1, static_cast<int>(std::ceil(cy + reach)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
    const int x1 =
        std::min(spec.frame_w - 1, static_cast<int>(std::ceil(cx + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double rho = target_rho(spec, cx, cy, phase, x, y);
        if (rho > 1.0) continue;
        mask.fg.at(y, x, 0) = 1.0;
        mask.bg.at(y, x, 0) = 0.0;
        const double shade = 0.8 + 0.2 * (1.0 - rho);
        for (int ch = 0; ch < 3; ++ch) {
          frame.at(y, x, ch) = spec.target_color[ch] * shade;
        }
      }
    }

    for (const auto& occ : spec.occluders) {
      if (t < occ.entry_frame || t >= occ.entry_frame + occ.duration ||
          occ.opacity == 0.0) {
        continue;
      }
      const auto oc = occluder_center(spec, occ, t);
      const int oy0 = std::max(0, static_cast<int>(std::floor(oc[1] - occ.half_h)));
      const int oy1 = std::min(spec.frame_h - 1,
                               static_cast<int>(std::ceil(oc[1] + occ.half_h)));
      const int ox0 = std::max(0, static_cast<int>(std::floor(oc[0] - occ.half_w)));
      const int ox1 = std::min(spec.frame_w - 1,
                               static_cast<int>(std::ceil(oc[0] + occ.half_w)));
      for (int y = oy0; y <= oy1; ++y) {
        for (int x = ox0; x <= ox1; ++x) {
          if (!inside_occluder(occ, oc, x, y)) continue;
          for (int ch = 0; ch < 3; ++ch) {
            frame.at(y, x, ch) = (1.0 - occ.opacity) * frame.at(y, x, ch) +
                                 occ.opacity * occ.color[ch];
          }
          if (mask.fg.at(y, x, 0) > 0.5) out.occluded[t] = true;
        }
      }
    }

    if (spec.brightness_slope != 0.0) {
      const double lift = spec.brightness_slope * t;
      for (double& v : frame.data) v += lift;
    }
    if (spec.noise_sigma > 0.0) {
      SplitMix64 g(derive_stream(spec.master_seed, 0x500 + t));
      for (double& v : frame.data) v += spec.noise_sigma * g.normal();
    }
    for (double& v : frame.data) v = std::clamp(v, 0.0, 1.0);

    out.frames.push_back(std::move(frame));
    out.gt_masks.push_back(std::move(mask));
  }
  return out;
}

}  // namespace samtrack

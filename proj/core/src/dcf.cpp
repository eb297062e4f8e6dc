#include "samtrack/dcf.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "samtrack/errors.hpp"

namespace samtrack {

MapPeak find_peak(const FeatureMap& map) {
  if (map.c != 1) throw std::invalid_argument("find_peak: expected one channel");
  if (map.pixels() == 0) throw std::invalid_argument("find_peak: empty map");
  MapPeak pk{0, 0, map.data[0]};
  for (int y = 0; y < map.h; ++y)
    for (int x = 0; x < map.w; ++x) {
      const double v = map.at(y, x, 0);
      if (v > pk.value) pk = {y, x, v};
    }
  return pk;
}

double decayed_weight(double insertion_weight, double decay, long age) {
  double w = insertion_weight;
  for (long i = 0; i < age; ++i) w *= decay;
  return w;
}

DcfModel::DcfModel(const DcfConfig& cfg, int in_channels, std::uint64_t seed)
    : cfg_(cfg), in_channels_(in_channels) {
  if (cfg.reduced_channels < 1) throw ConfigError("dcf: reduced_channels >= 1");
  if (cfg.kernel < 1) throw ConfigError("dcf: kernel >= 1");
  if (!(cfg.lambda > 0.0)) throw ConfigError("dcf: lambda > 0");
  if (!(cfg.sigma > 0.0)) throw ConfigError("dcf: sigma > 0");
  if (cfg.buffer_capacity < 1) throw ConfigError("dcf: buffer_capacity >= 1");
  if (!(cfg.decay > 0.0 && cfg.decay <= 1.0))
    throw ConfigError("dcf: decay in (0, 1]");
  if (cfg.gn_steps < 1 || cfg.cg_steps < 1)
    throw ConfigError("dcf: iteration counts >= 1");
  if (cfg.clamp_residual < 0.0) throw ConfigError("dcf: clamp_residual >= 0");
  if (in_channels < 1) throw ConfigError("dcf: input channels >= 1");

  SplitMix64 g(seed);
  reduction_ = seeded_conv(g, cfg.reduced_channels, in_channels, 1, 1);
  n_ = cfg.reduced_channels * cfg.kernel * cfg.kernel;
  filter_.assign(n_, 0.0);
}

FeatureMap DcfModel::reduce(const FeatureMap& x) const {
  if (x.c != in_channels_)
    throw std::invalid_argument("dcf: feature channel mismatch");
  return conv2d(x, reduction_, 1, Pad::kSame);
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Rows of v hold the
// eigenvectors; the sweep order is fixed so the result is deterministic.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& eval,
                  std::vector<double>& evec, int n) {
  evec.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) evec[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto at = [&](int r, int c) -> double& {
    return a[static_cast<std::size_t>(r) * n + c];
  };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vpk = evec[static_cast<std::size_t>(p) * n + k];
          const double vqk = evec[static_cast<std::size_t>(q) * n + k];
          evec[static_cast<std::size_t>(p) * n + k] = c * vpk - s * vqk;
          evec[static_cast<std::size_t>(q) * n + k] = s * vpk + c * vqk;
        }
      }
  }
  eval.resize(n);
  for (int i = 0; i < n; ++i) eval[i] = at(i, i);
}

}  // namespace

void DcfModel::calibrate_reduction(const FeatureMap& x) {
  if (x.c != in_channels_)
    throw std::invalid_argument("dcf: feature channel mismatch");
  if (!buffer_.empty())
    throw StateError("dcf: calibrate_reduction before the first sample");
  check_finite(x, "dcf calibration features");

  const int c = in_channels_;
  const int d = cfg_.reduced_channels;
  const std::size_t npix = static_cast<std::size_t>(x.pixels());
  std::vector<double> mean(c, 0.0);
  for (std::size_t p = 0; p < npix; ++p) {
    const double* v = x.data.data() + p * c;
    for (int i = 0; i < c; ++i) mean[i] += v[i];
  }
  for (int i = 0; i < c; ++i) mean[i] /= static_cast<double>(npix);

  std::vector<double> cov(static_cast<std::size_t>(c) * c, 0.0);
  for (std::size_t p = 0; p < npix; ++p) {
    const double* v = x.data.data() + p * c;
    for (int i = 0; i < c; ++i) {
      const double di = v[i] - mean[i];
      for (int j = i; j < c; ++j)
        cov[static_cast<std::size_t>(i) * c + j] += di * (v[j] - mean[j]);
    }
  }
  double trace = 0.0;
  for (int i = 0; i < c; ++i) {
    for (int j = i; j < c; ++j) {
      cov[static_cast<std::size_t>(i) * c + j] /= static_cast<double>(npix);
      cov[static_cast<std::size_t>(j) * c + i] =
          cov[static_cast<std::size_t>(i) * c + j];
    }
    trace += cov[static_cast<std::size_t>(i) * c + i];
  }

  std::vector<double> eval, evec;
  jacobi_eigen(cov, eval, evec, c);
  std::vector<int> order(c);
  for (int i = 0; i < c; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return eval[i] > eval[j]; });

  const double floor = 1e-8 * std::max(trace, 1e-30);
  for (int k = 0; k < d; ++k) {
    const int src = order[static_cast<std::size_t>(k % c)];
    const double scale = 1.0 / std::sqrt(std::max(eval[src], floor));
    double dot = 0.0;
    for (int i = 0; i < c; ++i) {
      const double w = scale * evec[static_cast<std::size_t>(src) * c + i];
      reduction_.taps(k, 0, 0)[i] = w;
      dot += w * mean[i];
    }
    reduction_.bias[k] = -dot;
  }
}

FeatureMap DcfModel::make_label(int h, int w, double cy, double cx) const {
  if (std::lround(cy) < 0 || std::lround(cy) >= h || std::lround(cx) < 0 ||
      std::lround(cx) >= w)
    throw std::invalid_argument("make_label: center outside dims");
  FeatureMap out(h, w, 1);
  const double inv = 1.0 / (2.0 * cfg_.sigma * cfg_.sigma);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dy = y - cy;
      const double dx = x - cx;
      out.at(y, x, 0) = std::exp(-(dy * dy + dx * dx) * inv);
    }
  return out;
}

void DcfModel::fill_cache(DcfSample& s) const {
  const int kf = cfg_.kernel;
  const int d = cfg_.reduced_channels;
  const int pad = (kf - 1) / 2;
  const int h = s.z.h, w = s.z.w;
  s.G.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  s.c.assign(n_, 0.0);
  s.yy = 0.0;
  std::vector<double> patch(n_);
  for (int py = 0; py < h; ++py)
    for (int px = 0; px < w; ++px) {
      for (int ky = 0; ky < kf; ++ky) {
        const int iy = py - pad + ky;
        for (int kx = 0; kx < kf; ++kx) {
          const int ix = px - pad + kx;
          double* dst = patch.data() + (static_cast<std::size_t>(ky) * kf + kx) * d;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::fill(dst, dst + d, 0.0);
          } else {
            const double* src = s.z.ptr(iy, ix);
            std::copy(src, src + d, dst);
          }
        }
      }
      const double yv = s.y.at(py, px, 0);
      s.yy += yv * yv;
      for (int a = 0; a < n_; ++a) {
        const double pa = patch[a];
        if (pa == 0.0) continue;
        double* grow = s.G.data() + static_cast<std::size_t>(a) * n_;
        for (int b = a; b < n_; ++b) grow[b] += pa * patch[b];
        s.c[a] += yv * pa;
      }
    }
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < a; ++b)
      s.G[static_cast<std::size_t>(a) * n_ + b] =
          s.G[static_cast<std::size_t>(b) * n_ + a];
}

void DcfModel::decay_weights() {
  for (DcfSample& s : buffer_)
    if (!s.pinned) s.weight *= cfg_.decay;
}

void DcfModel::push_sample(const FeatureMap& x, const FeatureMap& y,
                           double weight, bool pinned) {
  FeatureMap z = reduce(x);
  if (y.c != 1 || y.h != z.h || y.w != z.w)
    throw std::invalid_argument("dcf: label shape mismatch");
  if (!(weight > 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("dcf: sample weight must be positive finite");
  check_finite(z, "dcf reduced features");
  check_finite(y, "dcf label");

  DcfSample s;
  s.z = std::move(z);
  s.y = y;
  s.weight = weight;
  s.pinned = pinned;
  fill_cache(s);
  buffer_.push_back(std::move(s));

  if (sample_count() > cfg_.buffer_capacity) {
    for (auto it = buffer_.begin(); it != buffer_.end(); ++it)
      if (!it->pinned) {
        buffer_.erase(it);
        break;
      }
    if (sample_count() > cfg_.buffer_capacity) buffer_.pop_front();
  }
}

void DcfModel::assemble(std::vector<double>& A, std::vector<double>& b,
                        double& const_term, const double* mask_filter) const {
  A.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  b.assign(n_, 0.0);
  const_term = 0.0;

  if (mask_filter == nullptr) {
    for (const DcfSample& s : buffer_) {
      const double wgt = s.weight;
      for (std::size_t i = 0; i < A.size(); ++i) A[i] += wgt * s.G[i];
      for (int i = 0; i < n_; ++i) b[i] += wgt * s.c[i];
      const_term += wgt * s.yy;
    }
  } else {
    // Residual clamping: positions whose current residual saturates drop
    // out of the linearization and contribute a constant penalty.
    const int kf = cfg_.kernel;
    const int d = cfg_.reduced_channels;
    const int pad = (kf - 1) / 2;
    const double cap = cfg_.clamp_residual;
    std::vector<double> patch(n_);
    for (const DcfSample& s : buffer_) {
      const double wgt = s.weight;
      for (int py = 0; py < s.z.h; ++py)
        for (int px = 0; px < s.z.w; ++px) {
          for (int ky = 0; ky < kf; ++ky) {
            const int iy = py - pad + ky;
            for (int kx = 0; kx < kf; ++kx) {
              const int ix = px - pad + kx;
              double* dst =
                  patch.data() + (static_cast<std::size_t>(ky) * kf + kx) * d;
              if (iy < 0 || iy >= s.z.h || ix < 0 || ix >= s.z.w)
                std::fill(dst, dst + d, 0.0);
              else {
                const double* src = s.z.ptr(iy, ix);
                std::copy(src, src + d, dst);
              }
            }
          }
          const double yv = s.y.at(py, px, 0);
          const double r = dot(patch.data(), mask_filter, n_) - yv;
          if (std::abs(r) > cap) {
            const_term += wgt * cap * cap;
            continue;
          }
          for (int a = 0; a < n_; ++a) {
            const double pa = patch[a];
            if (pa == 0.0) continue;
            double* arow = A.data() + static_cast<std::size_t>(a) * n_;
            for (int bj = a; bj < n_; ++bj) arow[bj] += wgt * pa * patch[bj];
            b[a] += wgt * yv * pa;
          }
          const_term += wgt * yv * yv;
        }
    }
    for (int a = 0; a < n_; ++a)
      for (int bj = 0; bj < a; ++bj)
        A[static_cast<std::size_t>(a) * n_ + bj] =
            A[static_cast<std::size_t>(bj) * n_ + a];
  }

  for (int i = 0; i < n_; ++i)
    A[static_cast<std::size_t>(i) * n_ + i] += cfg_.lambda;
}

SolveReport DcfModel::solve(int gn_iters, int cg_iters, double tol) {
  if (buffer_.empty()) throw StateError("dcf: solve with empty buffer");
  if (gn_iters < 1 || cg_iters < 1)
    throw std::invalid_argument("dcf: iteration counts must be >= 1");

  SolveReport rep;
  const bool clamped = cfg_.clamp_residual > 0.0;
  std::vector<double> A, b;
  double cterm = 0.0;
  if (!clamped) assemble(A, b, cterm, nullptr);

  std::vector<double> Af(n_), r(n_), p(n_), Ap(n_);
  const auto matvec = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int i = 0; i < n_; ++i)
      out[i] = dot(A.data() + static_cast<std::size_t>(i) * n_, v.data(), n_);
  };
  const auto energy = [&]() {
    matvec(filter_, Af);
    return dot(filter_.data(), Af.data(), n_) -
           2.0 * dot(b.data(), filter_.data(), n_) + cterm;
  };

  for (int g = 0; g < gn_iters; ++g) {
    if (clamped) assemble(A, b, cterm, filter_.data());
    matvec(filter_, Af);
    for (int i = 0; i < n_; ++i) r[i] = b[i] - Af[i];
    p = r;
    double rr = dot(r.data(), r.data(), n_);
    const double bnorm = std::sqrt(dot(b.data(), b.data(), n_));
    rep.objective_trace.push_back(energy());
    for (int it = 0; it < cg_iters; ++it) {
      if (rr == 0.0) break;
      matvec(p, Ap);
      const double pAp = dot(p.data(), Ap.data(), n_);
      if (!(pAp > 0.0))
        throw NumericError("dcf: CG direction with non-positive curvature");
      const double alpha = rr / pAp;
      for (int i = 0; i < n_; ++i) {
        filter_[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
      }
      rep.objective_trace.push_back(energy());
      ++rep.cg_iterations;
      const double rr2 = dot(r.data(), r.data(), n_);
      if (std::sqrt(rr2) <= tol * std::max(1.0, bnorm)) {
        rr = rr2;
        break;
      }
      const double beta = rr2 / rr;
      rr = rr2;
      for (int i = 0; i < n_; ++i) p[i] = r[i] + beta * p[i];
    }
  }
  if (!std::isfinite(rep.objective_trace.back()))
    throw NumericError("dcf: non-finite objective");
  return rep;
}

void DcfModel::update(const FeatureMap& x, const FeatureMap& y, int gn_iters,
                      int cg_iters) {
  decay_weights();
  push_sample(x, y, 1.0, buffer_.empty());
  solve(gn_iters < 0 ? cfg_.gn_steps : gn_iters,
        cg_iters < 0 ? cfg_.cg_steps : cg_iters);
}

FeatureMap DcfModel::evaluate(const FeatureMap& x) const {
  const FeatureMap z = reduce(x);
  ConvWeights k(1, cfg_.reduced_channels, cfg_.kernel, cfg_.kernel);
  k.w = filter_;
  return conv2d(z, k, 1, Pad::kSame);
}

double DcfModel::objective() const {
  if (buffer_.empty()) throw StateError("dcf: objective with empty buffer");
  ConvWeights k(1, cfg_.reduced_channels, cfg_.kernel, cfg_.kernel);
  k.w = filter_;
  double e = 0.0;
  for (const DcfSample& s : buffer_) {
    const FeatureMap map = conv2d(s.z, k, 1, Pad::kSame);
    double acc = 0.0;
    for (std::size_t i = 0; i < map.data.size(); ++i) {
      const double d = map.data[i] - s.y.data[i];
      acc += d * d;
    }
    e += s.weight * acc;
  }
  e += cfg_.lambda * dot(filter_.data(), filter_.data(), n_);
  return e;
}

std::vector<double> DcfModel::weights() const {
  std::vector<double> out;
  out.reserve(buffer_.size());
  for (const DcfSample& s : buffer_) out.push_back(s.weight);
  return out;
}

void DcfModel::restore(std::vector<double> filter,
                       std::deque<DcfSample> buffer) {
  if (static_cast<int>(filter.size()) != n_)
    throw StateError("dcf: restore filter size mismatch");
  filter_ = std::move(filter);
  buffer_ = std::move(buffer);
  for (DcfSample& s : buffer_) {
    if (s.z.c != cfg_.reduced_channels || s.y.c != 1 ||
        s.z.h != s.y.h || s.z.w != s.y.w)
      throw StateError("dcf: restore sample shape mismatch");
    fill_cache(s);
  }
}

}  // namespace samtrack

#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "samtrack/tensor.hpp"

namespace samtrack {

struct DcfConfig {
  int reduced_channels = 4;  // D
  int kernel = 3;            // k_f
  double lambda = 0.05;
  double sigma = 1.0;  // label width in feature cells
  int buffer_capacity = 30;
  double decay = 0.99;
  int gn_steps = 2;
  int cg_steps = 10;
  // > 0 caps per-position residual magnitude; saturated positions drop out
  // of the linearization, so Gauss-Newton steps stop being exact re-solves.
  double clamp_residual = 0.0;
};

struct DcfSample {
  FeatureMap z;  // reduced features, (h, w, D)
  FeatureMap y;  // label, (h, w, 1)
  double weight = 1.0;
  bool pinned = false;

  // Cached normal-equation pieces: G = X^T X, c = X^T y, yy = y^T y, where
  // X rows are the zero-padded k_f x k_f patches of z.
  std::vector<double> G;
  std::vector<double> c;
  double yy = 0.0;
};

struct SolveReport {
  // Objective before the first CG iteration, then after each iteration,
  // concatenated across Gauss-Newton steps.
  std::vector<double> objective_trace;
  int cg_iterations = 0;
};

struct MapPeak {
  int y = 0;
  int x = 0;
  double value = 0.0;
};

// First occurrence in row-major order, so ties break deterministically.
MapPeak find_peak(const FeatureMap& map);

// Online discriminative correlation filter: a fixed seeded 1x1 channel
// reduction feeding a learned single-output k_f x k_f convolution (no bias
// anywhere, the model is linear in the learned weights). Trained on a ring
// of (features, label) samples by minimizing the weighted ridge objective
// with Gauss-Newton outer and Conjugate Gradient inner iterations.
class DcfModel {
 public:
  DcfModel(const DcfConfig& cfg, int in_channels, std::uint64_t seed);

  // Gaussian bump around the (possibly fractional) center; the maximum lands
  // on the cell nearest the center.
  FeatureMap make_label(int h, int w, double cy, double cx) const;

  // Replaces the seeded random channel reduction with a whitening projection
  // onto the top principal directions of the given feature map. Must run
  // before the first sample; the reduction stays fixed afterwards.
  void calibrate_reduction(const FeatureMap& x);

  // Decays existing weights, appends the sample (pinning the first one,
  // evicting the oldest unpinned when full), then re-optimizes the filter.
  // Negative iteration counts fall back to the configured defaults.
  void update(const FeatureMap& x, const FeatureMap& y, int gn_iters = -1,
              int cg_iters = -1);

  FeatureMap evaluate(const FeatureMap& x) const;

  // Weighted ridge objective over the buffer at the current filter.
  double objective() const;

  // Building blocks, also used directly by tests.
  void decay_weights();
  void push_sample(const FeatureMap& x, const FeatureMap& y, double weight,
                   bool pinned);
  SolveReport solve(int gn_iters, int cg_iters, double tol = 1e-12);

  int sample_count() const { return static_cast<int>(buffer_.size()); }
  std::vector<double> weights() const;
  const std::vector<double>& filter() const { return filter_; }
  const ConvWeights& reduction() const { return reduction_; }
  const DcfConfig& config() const { return cfg_; }
  int unknowns() const { return n_; }
  const std::deque<DcfSample>& samples() const { return buffer_; }

  // Checkpoint restore; normal-equation caches are recomputed from z/y.
  void restore(std::vector<double> filter, std::deque<DcfSample> buffer);

 private:
  FeatureMap reduce(const FeatureMap& x) const;
  void fill_cache(DcfSample& s) const;
  void assemble(std::vector<double>& A, std::vector<double>& b,
                double& const_term, const double* mask_filter) const;

  DcfConfig cfg_;
  int in_channels_ = 0;
  int n_ = 0;  // unknowns = D * k_f * k_f
  ConvWeights reduction_;
  std::vector<double> filter_;
  std::deque<DcfSample> buffer_;
};

// weight * decay^age by plain repeated multiplication; tests mirror it.
double decayed_weight(double insertion_weight, double decay, long age);

}  // namespace samtrack

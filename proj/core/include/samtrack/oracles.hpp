#pragma once

// Slow reference implementations kept deliberately naive and separate from
// the production code paths. Tests and the selftest command compare the two.

#include <array>
#include <utility>
#include <vector>

#include "samtrack/dcf.hpp"
#include "samtrack/mask.hpp"
#include "samtrack/sample_filter.hpp"
#include "samtrack/tensor.hpp"

namespace samtrack::oracle {

// Straight quadruple loop over an explicitly zero-padded input, long double
// accumulation, same padding arithmetic contract as conv2d.
FeatureMap conv2d_reference(const FeatureMap& in, const ConvWeights& k,
                            int stride, Pad pad);

// Per-output-pixel recomputation of the half-pixel-center sampling formula.
FeatureMap bilinear_reference(const FeatureMap& in, int oh, int ow);

// Joint softmax attention, one query pixel at a time in long double:
// logits over every (entry, position) pair, subtract the global max,
// exponentiate, normalize, then take the weighted sum of value vectors.
// Entries are (key, value) pairs with matching spatial dims.
FeatureMap attention_read_reference(
    const std::vector<std::pair<const FeatureMap*, const FeatureMap*>>& entries,
    const FeatureMap& query);

// Dense SPD solve via long double Cholesky. A is row-major n x n.
std::vector<double> spd_solve_reference(std::vector<long double> A,
                                        std::vector<long double> b, int n);

// Ridge normal equations of the model's buffered training problem,
// assembled naively (explicit zero-padded patches, long double sums).
void dcf_normal_equations_reference(const DcfModel& m,
                                    std::vector<long double>& A,
                                    std::vector<long double>& b);

// Direct dense solution of the model's current training problem.
std::vector<double> dcf_dense_solution_reference(const DcfModel& m);

// Single-sample dual form for a 1x1 filter: response = K (K + lambda I)^-1 y
// with Gram matrix K_pq = <z_p, z_q> over all positions.
FeatureMap dcf_dual_response_reference(const FeatureMap& z,
                                       const FeatureMap& y, double lambda);

// Straight-line transcription of the preserve/remove decision table over a
// raw peak history, no queue object. Every uncertainty (removed frames
// included) enters the sliding window.
std::vector<Decision> filter_decisions_reference(
    const std::vector<double>& peaks, int max_length, double hard_threshold);

// Long double accumulation of the segmentation loss (mean fg BCE plus the
// soft IoU complement).
double loss_reference(const MaskPair& pred, const MaskPair& label,
                      double lambda_iou, double bce_eps);

// Brute-force minimum footprint-inflated rectangle area: sweeps n_angles
// uniformly over [0, pi/2), projecting every point (no hull, no calipers).
double min_rect_area_sweep_reference(
    const std::vector<std::array<double, 2>>& pts, int n_angles);

// All-pairs boundary F-measure: boundary pixel lists on both sides, every
// pair's Chebyshev distance checked directly.
double contour_fmeasure_reference(const MaskPair& pred, const MaskPair& gt,
                                  double threshold, int tolerance_px);

}  // namespace samtrack::oracle

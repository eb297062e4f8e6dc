#pragma once

#include <vector>

#include "samtrack/mask.hpp"

namespace samtrack {

// Jaccard index of the binarized masks. Both empty counts as full agreement
// (1); one-sided empty is 0.
double region_similarity(const MaskPair& pred, const MaskPair& gt,
                         double threshold);

// Boundary F-measure. Boundaries are mask pixels with a 4-neighbor outside
// the mask (the frame edge counts as outside); a boundary pixel matches when
// a counterpart boundary pixel lies within the Chebyshev tolerance.
// F = 2PR / (P + R); both boundaries empty gives 1, one-sided empty gives 0.
double contour_fmeasure(const MaskPair& pred, const MaskPair& gt,
                        double threshold, int tolerance_px = 1);

// Failure accounting over a per-frame IoU trace: a failure is 5 consecutive
// frames below 0.1; those frames are excluded from the accuracy mean.
struct FailureRule {
  double iou_floor = 0.1;
  int consecutive = 5;
};

struct SequenceScores {
  std::vector<double> per_frame_iou;
  std::vector<double> per_frame_f;
  std::vector<bool> failed_frame;
  double j_mean = 0.0;   // mean IoU over every frame
  double f_mean = 0.0;   // mean boundary F over every frame
  double jf_mean = 0.0;  // (j_mean + f_mean) / 2
  double accuracy = 0.0;  // mean IoU over non-failed frames
  double robustness = 0.0;  // failures / frames
  int failures = 0;
};

// Marks failure windows in the IoU trace and fills the aggregate fields.
// per_frame_f may be empty; f_mean is then 0.
SequenceScores score_sequence(std::vector<double> per_frame_iou,
                              std::vector<double> per_frame_f,
                              const FailureRule& rule = {});

}  // namespace samtrack

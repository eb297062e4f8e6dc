#pragma once

#include <deque>

#include "samtrack/tensor.hpp"

namespace samtrack {

enum class Decision { kPreserved, kRemoved };

// Scores a spatial response map into an uncertainty value, keeps a bounded
// history, and decides whether the frame may enter the appearance memory:
// removed when the uncertainty exceeds the hard threshold, removed when it
// exceeds the running average, preserved otherwise (ties preserve).
class UncertaintyQueue {
 public:
  UncertaintyQueue(int max_length, double hard_threshold);

  // 1 / max(map); a peak at or below epsilon forces removal by returning
  // hard_threshold + 1.
  double uncertainty(const FeatureMap& spatial_map) const;

  double average() const;
  Decision decide(double u) const;
  void push(double u);

  int size() const { return static_cast<int>(values_.size()); }
  bool empty() const { return values_.empty(); }
  int max_length() const { return max_length_; }
  double hard_threshold() const { return hard_threshold_; }
  const std::deque<double>& values() const { return values_; }
  void restore(std::deque<double> values);

  static constexpr double kPeakEpsilon = 1e-6;

 private:
  int max_length_;
  double hard_threshold_;
  std::deque<double> values_;
};

}  // namespace samtrack

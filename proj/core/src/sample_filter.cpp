#include "samtrack/sample_filter.hpp"

#include <cmath>
#include <utility>

#include "samtrack/errors.hpp"

namespace samtrack {

UncertaintyQueue::UncertaintyQueue(int max_length, double hard_threshold)
    : max_length_(max_length), hard_threshold_(hard_threshold) {
  if (max_length < 1) throw ConfigError("uncertainty queue: max_length >= 1");
  if (!(hard_threshold > 0.0) || !std::isfinite(hard_threshold))
    throw ConfigError("uncertainty queue: hard_threshold must be positive");
}

double UncertaintyQueue::uncertainty(const FeatureMap& spatial_map) const {
  if (spatial_map.pixels() == 0 || spatial_map.c < 1)
    throw std::invalid_argument("uncertainty: empty map");
  double mx = spatial_map.data[0];
  for (double v : spatial_map.data) mx = std::max(mx, v);
  if (!(mx > kPeakEpsilon)) return hard_threshold_ + 1.0;
  return 1.0 / mx;
}

double UncertaintyQueue::average() const {
  if (values_.empty()) throw StateError("uncertainty queue: empty average");
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum / static_cast<double>(values_.size());
}

Decision UncertaintyQueue::decide(double u) const {
  if (!std::isfinite(u))
    throw std::invalid_argument("decide: non-finite uncertainty");
  if (u > hard_threshold_) return Decision::kRemoved;
  if (!values_.empty() && u > average()) return Decision::kRemoved;
  return Decision::kPreserved;
}

void UncertaintyQueue::push(double u) {
  if (!(u > 0.0) || !std::isfinite(u))
    throw std::invalid_argument("push: uncertainty must be positive finite");
  values_.push_back(u);
  if (static_cast<int>(values_.size()) > max_length_) values_.pop_front();
}

void UncertaintyQueue::restore(std::deque<double> values) {
  if (static_cast<int>(values.size()) > max_length_)
    throw StateError("uncertainty queue: restore exceeds max_length");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw StateError("uncertainty queue: restore with invalid value");
  values_ = std::move(values);
}

}  // namespace samtrack

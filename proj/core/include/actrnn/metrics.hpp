// SPDX-License-Identifier: Apache-2.0

#ifndef ACTRNN_METRICS_HPP
#define ACTRNN_METRICS_HPP

#include <cstddef>
#include <deque>
#include <span>

namespace actrnn {

/// Mean of the most recent `width` values pushed (fewer at the start).
class WindowMean {
 public:
  explicit WindowMean(std::size_t width);
  double push(double v);
  double mean() const;
  std::size_t count() const { return values_.size(); }

 private:
  std::size_t width_;
  std::deque<double> values_;
  double sum_ = 0.0;
};

struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n); 0 for n < 2
  double ci_low = 0.0;     // Student-t interval at the requested level
  double ci_high = 0.0;
  double median = 0.0;
};

SummaryStats summarize(std::span<const double> values, double level = 0.95);

double median(std::span<const double> values);

/// Mean of the last ceil(fraction * size) values; NaN when empty.
double tail_mean(std::span<const double> values, double fraction);

}  // namespace actrnn

#endif  // ACTRNN_METRICS_HPP

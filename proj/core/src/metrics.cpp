// SPDX-License-Identifier: Apache-2.0

#include "actrnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace actrnn {

WindowMean::WindowMean(std::size_t width) : width_(width) {
  if (width == 0) throw std::invalid_argument("window width must be positive");
}

double WindowMean::push(double v) {
  values_.push_back(v);
  sum_ += v;
  if (values_.size() > width_) {
    sum_ -= values_.front();
    values_.pop_front();
  }
  return mean();
}

double WindowMean::mean() const {
  if (values_.empty()) return std::numeric_limits<double>::quiet_NaN();
  return sum_ / static_cast<double>(values_.size());
}

double median(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SummaryStats summarize(std::span<const double> values, double level) {
  SummaryStats s;
  s.n = values.size();
  if (s.n == 0) {
    s.mean = s.std_error = s.ci_low = s.ci_high = s.median =
        std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  s.median = median(values);
  if (s.n < 2) {
    s.ci_low = s.ci_high = s.mean;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.std_error = sd / std::sqrt(static_cast<double>(s.n));
  boost::math::students_t dist(static_cast<double>(s.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
  s.ci_low = s.mean - t * s.std_error;
  s.ci_high = s.mean + t * s.std_error;
  return s;
}

double tail_mean(std::span<const double> values, double fraction) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(values.size()) - 1e-9));
  const std::size_t take = std::clamp<std::size_t>(k, 1, values.size());
  const auto tail = values.subspan(values.size() - take);
  return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(take);
}

}  // namespace actrnn

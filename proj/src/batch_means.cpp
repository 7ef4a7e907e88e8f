#include "aoi/batch_means.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

namespace aoi {

BatchSummary summarize_batches(std::span<const double> batch_values) {
  BatchSummary out;
  const auto n = static_cast<double>(batch_values.size());
  if (batch_values.empty()) return out;
  double sum = 0.0;
  for (double v : batch_values) sum += v;
  out.mean = sum / n;
  if (batch_values.size() < 2) return out;
  double ss = 0.0;
  for (double v : batch_values) ss += (v - out.mean) * (v - out.mean);
  out.standard_error = std::sqrt(ss / (n - 1.0) / n);
  const boost::math::students_t dist(n - 1.0);
  out.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * out.standard_error;
  return out;
}

}  // namespace aoi

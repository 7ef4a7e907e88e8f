#pragma once

#include <span>

namespace aoi {

struct BatchSummary {
  double mean = 0.0;
  double standard_error = 0.0;  // s / sqrt(n)
  double half_width = 0.0;      // 95% Student-t half-width
};

// Summary of per-batch estimates; fewer than two batches give zero spread.
BatchSummary summarize_batches(std::span<const double> batch_values);

}  // namespace aoi

#pragma once

#include <span>
#include <vector>

namespace spm {

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double q);

/// Copies, sorts and calls quantile_sorted.
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);

}  // namespace spm

#include "spm/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spm/errors.hpp"

namespace spm {

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
    if (q < 0.0 || q > 1.0) throw InvalidInput("quantile level must lie in [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, q);
}

double mean(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace spm

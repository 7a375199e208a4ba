#pragma once

#include <span>
#include <vector>

namespace evcharge::stats {

// Linear-interpolated quantile (Hyndman-Fan type 7) of unsorted values.
// Returns 0 for an empty input.
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);

// Sample standard deviation (n - 1 denominator); 0 when fewer than two values.
double sample_sd(std::span<const double> values);

}  // namespace evcharge::stats

#pragma once

#include <span>
#include <vector>

namespace hybridlab {

/// Sample quantile, linear interpolation between order statistics
/// (Hyndman-Fan type 7). Copies and sorts.
double quantile(std::span<const double> values, double p);
double quantile_sorted(std::span<const double> sorted, double p);

/// Ordinary least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Two-sided normal quantile for a central interval of the given level (0.9 -> 1.6449).
double normal_quantile_two_sided(double level);

/// Wilson score interval half-width for k successes out of n.
double wilson_half_width(long successes, long trials, double level = 0.9);

struct Interval {
    double lo;
    double hi;
};

/// Distribution-free confidence interval for the median from order statistics.
Interval median_interval(std::span<const double> values, double level = 0.9);

}  // namespace hybridlab

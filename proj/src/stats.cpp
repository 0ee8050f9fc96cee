#include "hybridlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hybridlab/error.hpp"

namespace hybridlab {

double quantile_sorted(std::span<const double> sorted, double p) {
    require(!sorted.empty(), "quantile of an empty sample");
    require(p >= 0.0 && p <= 1.0, "quantile level must be in [0,1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, p);
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "slope fit needs at least two paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    require(sxx > 0.0, "slope fit needs distinct abscissae");
    return sxy / sxx;
}

double normal_quantile_two_sided(double level) {
    require(level > 0.0 && level < 1.0, "confidence level must be in (0,1)");
    // Newton on erfc(z / sqrt 2) = 1 - level.
    const double target = 1.0 - level;
    double z = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double f = std::erfc(z / std::numbers::sqrt2) - target;
        const double df = -std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z);
        const double step = f / df;
        z -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, z)) break;
    }
    return z;
}

double wilson_half_width(long successes, long trials, double level) {
    require(trials >= 1 && successes >= 0 && successes <= trials, "invalid binomial counts");
    const double z = normal_quantile_two_sided(level);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    return z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
}

Interval median_interval(std::span<const double> values, double level) {
    require(!values.empty(), "median interval of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    const double z = normal_quantile_two_sided(level);
    const double half = 0.5 * z * std::sqrt(n);
    const auto last = static_cast<long>(v.size()) - 1;
    const long lo = std::clamp(static_cast<long>(std::floor(n / 2.0 - half)) - 1, 0L, last);
    const long hi = std::clamp(static_cast<long>(std::ceil(n / 2.0 + half)), 0L, last);
    return {v[static_cast<std::size_t>(lo)], v[static_cast<std::size_t>(hi)]};
}

}  // namespace hybridlab

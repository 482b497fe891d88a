#pragma once

#include <cmath>

namespace l0lab {

/// Complementary CDF of the standard normal.
inline double normal_upper_tail(double x) {
    return 0.5 * std::erfc(x / 1.4142135623730951);
}

/// z such that normal_upper_tail(z) = (1 - confidence) / 2, e.g. 1.96 for 0.95.
inline double normal_two_sided_quantile(double confidence) {
    const double target = 0.5 * (1.0 - confidence);
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (normal_upper_tail(mid) > target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace l0lab

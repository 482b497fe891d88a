#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "l0lab/random.hpp"

namespace testutil {

/// Fixed-resolution composite Simpson rule. Deliberately independent of the
/// adaptive integrator so it can serve as an oracle for it.
template <typename F>
double composite_simpson(F&& f, double a, double b, std::size_t panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double acc = 0.0;
    double prev = f(a);
    for (std::size_t i = 1; i <= panels; ++i) {
        const double right = a + h * static_cast<double>(i);
        const double mid = right - 0.5 * h;
        const double cur = f(right);
        acc += (h / 6.0) * (prev + 4.0 * f(mid) + cur);
        prev = cur;
    }
    return acc;
}

/// Normalized CDF of a density tabulated on a fine grid, queried by linear
/// interpolation.
class GridCdf {
public:
    template <typename F>
    GridCdf(F&& density, double lo, double hi, std::size_t panels) : lo_(lo), hi_(hi) {
        const double h = (hi - lo) / static_cast<double>(panels);
        cum_.resize(panels + 1);
        cum_[0] = 0.0;
        double prev = density(lo);
        for (std::size_t i = 1; i <= panels; ++i) {
            const double right = lo + h * static_cast<double>(i);
            const double cur = density(right);
            cum_[i] = cum_[i - 1] + (h / 6.0) * (prev + 4.0 * density(right - 0.5 * h) + cur);
            prev = cur;
        }
        const double total = cum_.back();
        for (auto& v : cum_) v /= total;
    }

    double operator()(double z) const {
        if (z <= lo_) return 0.0;
        if (z >= hi_) return 1.0;
        const double pos = (z - lo_) / (hi_ - lo_) * static_cast<double>(cum_.size() - 1);
        const std::size_t i = std::min(static_cast<std::size_t>(pos), cum_.size() - 2);
        const double frac = pos - static_cast<double>(i);
        return cum_[i] + frac * (cum_[i + 1] - cum_[i]);
    }

private:
    double lo_, hi_;
    std::vector<double> cum_;
};

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double F = cdf(draws[i]);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
        d = std::max(d, std::abs(F - static_cast<double>(i) / n));
    }
    return d;
}

/// One-sample KS critical value at significance alpha (asymptotic).
inline double ks_critical(double alpha, std::size_t n) {
    return std::sqrt(std::log(2.0 / alpha) / 2.0) / std::sqrt(static_cast<double>(n));
}

/// Two-sample KS statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

inline double ks_two_sample_critical(double alpha, std::size_t n, std::size_t m) {
    const double c = std::sqrt(std::log(2.0 / alpha) / 2.0);
    return c * std::sqrt(static_cast<double>(n + m) /
                         (static_cast<double>(n) * static_cast<double>(m)));
}

inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Uniform double in [lo, hi) from a stream.
inline double uniform(l0lab::RandomStream& s, double lo, double hi) {
    return lo + (hi - lo) * s.next_unit();
}

/// Standard normal via Box-Muller; independent of the library sampler.
inline double box_muller(l0lab::RandomStream& s) {
    const double u1 = s.next_unit();
    const double u2 = s.next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace testutil

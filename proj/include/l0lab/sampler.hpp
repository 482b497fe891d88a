#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "l0lab/errors.hpp"
#include "l0lab/random.hpp"

namespace l0lab {

/// Tabulated inverse CDF: a strictly increasing piecewise-linear map from
/// (0,1) onto [-radius, radius], with nodes at equally spaced probabilities.
class SamplerTable {
public:
    SamplerTable() = default;
    SamplerTable(std::vector<double> nodes, double radius)
        : nodes_(std::move(nodes)), radius_(radius) {}

    /// Map u in (0,1) through the table.
    double sample_unit(double u) const {
        const double pos = u * static_cast<double>(nodes_.size() - 1);
        std::size_t i = static_cast<std::size_t>(pos);
        if (i >= nodes_.size() - 1) i = nodes_.size() - 2;
        const double frac = pos - static_cast<double>(i);
        return nodes_[i] + frac * (nodes_[i + 1] - nodes_[i]);
    }

    double sample(RandomStream& stream) const { return sample_unit(stream.next_unit()); }

    double radius() const noexcept { return radius_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }

private:
    std::vector<double> nodes_;
    double radius_ = 0.0;
};

/// Build the inverse-CDF table of a density q over [-radius, radius].
///
/// The CDF is accumulated on a fine Simpson grid and inverted at
/// equal-probability nodes, so sampling bias is bounded uniformly in
/// probability. `tail_mass_bound` is the caller's bound on the mass outside
/// the radius (the noise module passes its analytic tail bound).
template <typename Density>
SamplerTable build_inverse_cdf_table(Density&& q, double radius, std::size_t grid_points,
                                     double tail_mass_bound = 0.0) {
    if (tail_mass_bound > 1e-12)
        throw InsufficientTailRadius("tail mass bound " + std::to_string(tail_mass_bound) +
                                     " exceeds 1e-12 at radius " + std::to_string(radius));

    const std::size_t fine = 1u << 16;
    const double h = 2.0 * radius / static_cast<double>(fine);
    std::vector<double> cdf(fine + 1);
    std::vector<double> z(fine + 1);
    cdf[0] = 0.0;
    z[0] = -radius;
    double prev = q(-radius);
    for (std::size_t i = 1; i <= fine; ++i) {
        z[i] = -radius + h * static_cast<double>(i);
        const double mid = q(z[i] - 0.5 * h);
        const double cur = q(z[i]);
        const double cell = (h / 6.0) * (prev + 4.0 * mid + cur);
        if (cell < 0.0) throw NonMonotoneCDF("cumulative mass decreases at z=" + std::to_string(z[i]));
        cdf[i] = cdf[i - 1] + cell;
        prev = cur;
    }
    const double total = cdf[fine];
    if (!(total > 0.0) || !std::isfinite(total))
        throw NonMonotoneCDF("density has non-positive or non-finite total mass");
    for (auto& v : cdf) v /= total;

    std::vector<double> nodes(grid_points + 1);
    nodes[0] = -radius;
    nodes[grid_points] = radius;
    std::size_t cell = 0;
    for (std::size_t j = 1; j < grid_points; ++j) {
        const double u = static_cast<double>(j) / static_cast<double>(grid_points);
        while (cell + 1 < fine && cdf[cell + 1] < u) ++cell;
        const double span = cdf[cell + 1] - cdf[cell];
        const double frac = span > 0.0 ? (u - cdf[cell]) / span : 0.0;
        nodes[j] = z[cell] + frac * h;
        if (nodes[j] <= nodes[j - 1])
            throw NonMonotoneCDF("inverse CDF not strictly increasing at node " + std::to_string(j));
    }
    return SamplerTable(std::move(nodes), radius);
}

} // namespace l0lab

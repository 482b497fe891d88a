#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "l0lab/errors.hpp"
#include "l0lab/polynomial.hpp"
#include "l0lab/quadrature.hpp"
#include "l0lab/random.hpp"
#include "l0lab/sampler.hpp"

namespace l0lab {

/// Numerical audit of the regularity assumptions behind the theory:
/// expected local suprema of log-density derivatives and the empirical
/// behaviour of max_i |psi'(Z_i)| against a C4 (log d)^gamma envelope.
struct AuditReport {
    double zeta = 0.0;
    double a2_value = 0.0;               // E[ sup |psi'''| over [Z-zeta, Z+zeta] ]
    double a3_value = 0.0;               // E[ (sup |psi''| over [Z-zeta, Z+zeta])^2 ]
    double a4_gamma = 0.0;
    double a4_c4 = 0.0;
    double a4_empirical_exceed_rate = 0.0;
    bool fisher_finite = false;
};

/// Noise density q(z) = exp(psi(z)) / A with psi an even-degree polynomial
/// whose leading coefficient is negative. Owns the normalizer, Fisher
/// information, truncation radius, and the inverse-CDF sampler table.
/// Immutable after construction; safe for concurrent reads.
class ExpPolyNoise {
public:
    explicit ExpPolyNoise(std::vector<double> psi_coeffs, std::size_t sampler_grid = 1u << 14)
        : psi_(std::move(psi_coeffs)) {
        const int deg = psi_.degree();
        if (deg < 2 || deg % 2 != 0)
            throw OddDegree("psi degree must be a positive even integer, got " + std::to_string(deg));
        if (!(psi_.leading() < 0.0))
            throw NonNegativeLeadingCoefficient("leading psi coefficient must be negative, got " +
                                                std::to_string(psi_.leading()));
        half_degree_ = deg / 2;
        leading_magnitude_ = -psi_.leading();
        psi_d1_ = psi_.derivative();
        psi_d2_ = psi_d1_.derivative();
        psi_d3_ = psi_d2_.derivative();

        validity_radius_ = compute_validity_radius();

        // First radius pass runs on a cheap stand-in for A, so aim an order of
        // magnitude past the 1e-12 target; the second pass then re-solves the
        // tail bound with the true normalizer.
        const double coarse_radius = radius_for_tail_target(1e-13);

        quad_.truncation_radius = coarse_radius;
        quad_.abs_tol = 1e-13;
        quad_.rel_tol = 1e-12;
        quad_.max_subdivisions = 1u << 16;

        // Integrate exp(psi - psi_max) so large constant terms cannot overflow.
        psi_shift_ = psi_.sup(-coarse_radius, coarse_radius);
        double mass;
        try {
            mass = integrate([this](double z) { return std::exp(psi_(z) - psi_shift_); }, quad_);
        } catch (const Error& e) {
            throw NormalizationFailure(std::string("normalizer quadrature failed: ") + e.what());
        }
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw NormalizationFailure("normalizer is non-positive or non-finite");
        shifted_mass_ = mass;
        log_normalizer_ = psi_shift_ + std::log(mass);
        normalizer_ready_ = true;

        truncation_radius_ = radius_for_tail_target(1e-12);
        quad_.truncation_radius = truncation_radius_;

        fisher_info_ = integrate(
            [this](double z) {
                double s = psi_d1_(z);
                return s * s * std::exp(psi_(z) - psi_shift_);
            },
            quad_) / shifted_mass_;
        if (!(fisher_info_ > 0.0) || !std::isfinite(fisher_info_))
            throw NonConvergent("Fisher information is non-positive or non-finite");

        sampler_ = build_inverse_cdf_table([this](double z) { return std::exp(psi_(z) - psi_shift_); },
                                           truncation_radius_, sampler_grid,
                                           lemma_tail_bound(truncation_radius_));
    }

    const Polynomial& psi() const noexcept { return psi_; }
    int degree() const noexcept { return 2 * half_degree_; }
    double leading_magnitude() const noexcept { return leading_magnitude_; }
    double log_normalizer() const noexcept { return log_normalizer_; }
    double normalizer() const noexcept { return std::exp(log_normalizer_); }
    double truncation_radius() const noexcept { return truncation_radius_; }
    double validity_radius() const noexcept { return validity_radius_; }
    double fisher_information() const noexcept { return fisher_info_; }
    const SamplerTable& sampler() const noexcept { return sampler_; }
    const QuadratureSpec& quad_spec() const noexcept { return quad_; }

    double log_density(double z) const noexcept { return psi_(z) - log_normalizer_; }
    double density(double z) const noexcept { return std::exp(log_density(z)); }

    double log_density_derivative(double z, int order) const {
        switch (order) {
            case 1: return psi_d1_(z);
            case 2: return psi_d2_(z);
            case 3: return psi_d3_(z);
            default: throw UnsupportedOrder("derivative order must be 1, 2 or 3, got " + std::to_string(order));
        }
    }

    double sample(RandomStream& stream) const { return sampler_.sample(stream); }

    /// KL divergence D(q(.-mu) || q(.+mu)) = E_q[psi(Z) - psi(Z + 2 mu)].
    double kl_shifted(double mu) const {
        if (mu == 0.0) return 0.0;
        const double v = integrate(
            [this, mu](double z) {
                return (psi_(z) - psi_(z + 2.0 * mu)) * std::exp(psi_(z) - psi_shift_);
            },
            quad_) / shifted_mass_;
        return std::max(v, 0.0);
    }

    /// Total variation distance between q(.-mu) and q(.+mu).
    /// Integrates |q(z-mu) - q(z+mu)| piecewise between the sign changes of
    /// the polynomial psi(z-mu) - psi(z+mu), so every piece is smooth.
    double tv_shifted(double mu) const {
        if (mu == 0.0) return 0.0;
        const double lo = -truncation_radius_ - std::abs(mu);
        const double hi = truncation_radius_ + std::abs(mu);
        Polynomial diff = difference_poly(mu);
        std::vector<double> cuts{lo};
        for (double r : diff.real_roots())
            if (r > lo && r < hi) cuts.push_back(r);
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double piece = integrate_interval(
                [this, mu](double z) {
                    return std::exp(psi_(z - mu) - psi_shift_) - std::exp(psi_(z + mu) - psi_shift_);
                },
                cuts[i], cuts[i + 1], quad_);
            total += std::abs(piece);
        }
        return std::clamp(0.5 * total / shifted_mass_, 0.0, 1.0);
    }

    /// Closed-form super-Gaussian tail bound
    ///   P(|Z| >= t) <= 2 / (n A a t^(2n-1)) exp(-a t^(2n) / 2),
    /// valid for t at or beyond the validity radius where
    /// -2 a z^(2n) <= psi(z) <= -(a/2) z^(2n).
    double tail_bound(double t) const {
        if (t < validity_radius_)
            throw BelowValidityRadius("t=" + std::to_string(t) + " is below the validity radius " +
                                      std::to_string(validity_radius_));
        return std::min(1.0, lemma_tail_bound(t));
    }

    AuditReport audit_assumptions(double zeta, std::size_t d_probe, std::size_t trials,
                                  std::uint64_t seed) const {
        AuditReport report;
        report.zeta = zeta;
        report.a2_value = expected_local_sup(psi_d3_, zeta, /*square=*/false);
        report.a3_value = expected_local_sup(psi_d2_, zeta, /*square=*/true);
        report.a4_gamma = 1.0 - 1.0 / static_cast<double>(degree());

        // One admissible (C4, gamma) pair: bound |z| by c2 (log d)^(1/2n) and
        // push it through |psi'(z)| <= sum_i i |b_i| |z|^(i-1).
        const double c2 = 1.25 * std::max(validity_radius_,
                                          std::pow(2.0 / leading_magnitude_,
                                                   1.0 / static_cast<double>(degree())));
        double c4 = 0.0;
        const auto& b = psi_.coeffs();
        for (std::size_t i = 1; i < b.size(); ++i)
            c4 += static_cast<double>(i) * std::abs(b[i]) * std::pow(c2, static_cast<double>(i - 1));
        report.a4_c4 = c4;

        const double threshold = c4 * std::pow(std::log(static_cast<double>(d_probe)), report.a4_gamma);

        // The event max_i |psi'(Z_i)| > T is decided exactly: the exceed set
        // {z: |psi'(z)| > T} comes from polynomial threshold crossings and is
        // mapped to probability space through the numeric CDF, so the test is
        // free of sampler-table tail granularity. The draws stay Monte Carlo.
        const std::vector<std::pair<double, double>> region = exceed_region_in_u(threshold);
        auto in_region = [&](double u) {
            for (const auto& [lo, hi] : region)
                if (u > lo && u < hi) return true;
            return false;
        };
        std::size_t exceed = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            RandomStream stream(seed, t);
            bool hit = false;
            for (std::size_t i = 0; i < d_probe; ++i) hit = in_region(stream.next_unit()) || hit;
            if (hit) ++exceed;
        }
        report.a4_empirical_exceed_rate =
            trials == 0 ? 0.0 : static_cast<double>(exceed) / static_cast<double>(trials);
        report.fisher_finite = std::isfinite(fisher_info_) && fisher_info_ > 0.0;
        return report;
    }

    /// CDF of the noise at z, by quadrature over [-R, z].
    double cdf(double z) const {
        if (z <= -truncation_radius_) return 0.0;
        if (z >= truncation_radius_) return 1.0;
        const double mass = integrate_interval(
            [this](double t) { return std::exp(psi_(t) - psi_shift_); }, -truncation_radius_, z,
            quad_);
        return std::clamp(mass / shifted_mass_, 0.0, 1.0);
    }

private:
    /// Smallest radius at which -2 a z^(2n) <= psi(z) <= -(a/2) z^(2n) holds
    /// for all larger |z|, found by locating the outermost sign changes of the
    /// two comparison polynomials.
    double compute_validity_radius() const {
        const std::size_t p = static_cast<std::size_t>(degree());
        Polynomial upper = psi_.plus_monomial(2.0 * leading_magnitude_, p);   // >= 0 outside
        Polynomial lower = psi_.plus_monomial(0.5 * leading_magnitude_, p);   // <= 0 outside
        double radius = 1e-8;
        for (const Polynomial& comparison : {upper, lower})
            for (double r : comparison.real_roots()) radius = std::max(radius, std::abs(r));
        return radius * (1.0 + 1e-10);
    }

    double lemma_tail_bound(double t) const {
        const double n = static_cast<double>(half_degree_);
        const double a = leading_magnitude_;
        const double exponent = -0.5 * a * std::pow(t, static_cast<double>(degree()));
        return 2.0 / (n * std::exp(log_normalizer_or_estimate()) * a *
                      std::pow(t, static_cast<double>(degree() - 1))) *
               std::exp(exponent);
    }

    /// During construction the normalizer is not known yet when the radius is
    /// chosen; a crude lower bound on A keeps the tail bound an upper bound.
    double log_normalizer_or_estimate() const {
        if (normalizer_ready_) return log_normalizer_;
        // A >= integral over [-v, v] of exp(psi) with a 256-panel Simpson pass;
        // enough for radius selection, replaced by the true value afterwards.
        const double v = std::max(1.0, validity_radius_);
        const int panels = 256;
        const double h = 2.0 * v / panels;
        double acc = 0.0;
        double prev = std::exp(psi_(-v));
        for (int i = 1; i <= panels; ++i) {
            const double z = -v + h * i;
            const double mid = std::exp(psi_(z - 0.5 * h));
            const double cur = std::exp(psi_(z));
            acc += (h / 6.0) * (prev + 4.0 * mid + cur);
            prev = cur;
        }
        return std::log(std::max(acc, 1e-300));
    }

    /// Doubling-then-bisection solve of lemma_tail_bound(R) <= target,
    /// starting at the validity radius.
    double radius_for_tail_target(double target) const {
        double lo = std::max(validity_radius_, 1e-6);
        double hi = std::max(lo, 1.0);
        int iter = 0;
        while (lemma_tail_bound(hi) > target) {
            lo = hi;
            hi *= 2.0;
            if (++iter > 200)
                throw NormalizationFailure("tail bound never reached the target while doubling the radius");
        }
        if (lemma_tail_bound(lo) <= target) return lo;
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (lemma_tail_bound(mid) <= target) hi = mid;
            else lo = mid;
        }
        return hi;
    }

    /// E_Z[ sup_{t in [Z-zeta, Z+zeta]} |p(t)| ] or the same with the sup
    /// squared. The inner sup is exact for polynomials: endpoints plus
    /// stationary points, with a 64-node grid as a safety net.
    double expected_local_sup(const Polynomial& p, double zeta, bool square) const {
        const std::vector<double> stationary = p.derivative().real_roots();
        auto local_sup = [&](double z) {
            const double lo = z - zeta, hi = z + zeta;
            double m = std::max(std::abs(p(lo)), std::abs(p(hi)));
            for (double r : stationary)
                if (r > lo && r < hi) m = std::max(m, std::abs(p(r)));
            for (int i = 1; i < 64; ++i) {
                const double t = lo + (hi - lo) * static_cast<double>(i) / 64.0;
                m = std::max(m, std::abs(p(t)));
            }
            return m;
        };
        QuadratureSpec spec = quad_;
        spec.abs_tol = 1e-10;
        spec.rel_tol = 1e-9;
        const double v = integrate(
            [&](double z) {
                const double s = local_sup(z);
                return (square ? s * s : s) * std::exp(psi_(z) - psi_shift_);
            },
            spec) / shifted_mass_;
        return std::max(v, 0.0);
    }

    /// Probability-space intervals where |psi'| exceeds the threshold,
    /// obtained from the real crossings of psi' = +-threshold.
    std::vector<std::pair<double, double>> exceed_region_in_u(double threshold) const {
        const double R = truncation_radius_;
        std::vector<double> breaks{-R, R};
        for (double offset : {-threshold, threshold}) {
            const Polynomial crossing = psi_d1_.plus_monomial(-offset, 0);
            for (double r : crossing.real_roots())
                if (r > -R && r < R) breaks.push_back(r);
        }
        std::sort(breaks.begin(), breaks.end());
        std::vector<std::pair<double, double>> region;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
            if (std::abs(psi_d1_(mid)) > threshold) {
                const double lo = cdf(breaks[i]);
                const double hi = cdf(breaks[i + 1]);
                if (hi > lo) region.emplace_back(lo, hi);
            }
        }
        return region;
    }

    Polynomial difference_poly(double mu) const {
        // psi(z - mu) - psi(z + mu) as an explicit polynomial in z
        std::vector<double> c = psi_.shifted(-mu).coeffs();
        const Polynomial plus = psi_.shifted(mu);
        const std::vector<double>& d = plus.coeffs();
        if (c.size() < d.size()) c.resize(d.size(), 0.0);
        for (std::size_t i = 0; i < d.size(); ++i) c[i] -= d[i];
        return Polynomial(std::move(c));
    }

    Polynomial psi_, psi_d1_, psi_d2_, psi_d3_;
    int half_degree_ = 0;
    double leading_magnitude_ = 0.0;
    double validity_radius_ = 0.0;
    double truncation_radius_ = 0.0;
    double psi_shift_ = 0.0;
    double shifted_mass_ = 0.0;
    double log_normalizer_ = 0.0;
    double fisher_info_ = 0.0;
    bool normalizer_ready_ = false;
    QuadratureSpec quad_;
    SamplerTable sampler_;
};

inline ExpPolyNoise new_exp_poly(std::vector<double> psi_coeffs) {
    return ExpPolyNoise(std::move(psi_coeffs));
}

} // namespace l0lab

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace l0lab {

/// Dense univariate polynomial with ascending coefficients:
/// p(z) = c[0] + c[1] z + ... + c[n] z^n.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

    const std::vector<double>& coeffs() const noexcept { return coeffs_; }

    int degree() const noexcept {
        return coeffs_.empty() ? -1 : static_cast<int>(coeffs_.size()) - 1;
    }

    double leading() const noexcept { return coeffs_.empty() ? 0.0 : coeffs_.back(); }

    double operator()(double z) const noexcept {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * z + coeffs_[i];
        return acc;
    }

    Polynomial derivative() const {
        if (coeffs_.size() <= 1) return Polynomial{};
        std::vector<double> d(coeffs_.size() - 1);
        for (std::size_t i = 1; i < coeffs_.size(); ++i)
            d[i - 1] = coeffs_[i] * static_cast<double>(i);
        return Polynomial(std::move(d));
    }

    /// Coefficients of p(z + h) (Taylor shift by repeated synthetic division).
    Polynomial shifted(double h) const {
        std::vector<double> c = coeffs_;
        const std::size_t n = c.size();
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = n - 1; j > i; --j)
                c[j - 1] += h * c[j];
        return Polynomial(std::move(c));
    }

    Polynomial plus_monomial(double coeff, std::size_t power) const {
        std::vector<double> c = coeffs_;
        if (c.size() <= power) c.resize(power + 1, 0.0);
        c[power] += coeff;
        return Polynomial(std::move(c));
    }

    /// Upper bound on the magnitude of every root (Cauchy bound).
    double root_bound() const {
        if (degree() < 1) return 0.0;
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < coeffs_.size(); ++i)
            m = std::max(m, std::abs(coeffs_[i] / coeffs_.back()));
        return 1.0 + m;
    }

    /// All real roots where the polynomial changes sign, ascending. Roots of
    /// even multiplicity (no sign change) are not reported; callers here only
    /// need sign-change structure or candidate extrema, for which the
    /// derivative recursion below is exact enough.
    std::vector<double> real_roots() const {
        std::vector<double> roots;
        const int deg = degree();
        if (deg < 1) return roots;
        if (deg == 1) {
            roots.push_back(-coeffs_[0] / coeffs_[1]);
            return roots;
        }
        const double bound = root_bound();
        std::vector<double> nodes = derivative().real_roots();
        nodes.push_back(-bound);
        nodes.push_back(bound);
        std::sort(nodes.begin(), nodes.end());
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            double lo = nodes[i], hi = nodes[i + 1];
            if (!(lo < hi)) continue;
            double flo = (*this)(lo), fhi = (*this)(hi);
            if (flo == 0.0) {
                if (roots.empty() || roots.back() != lo) roots.push_back(lo);
                continue;
            }
            if (flo * fhi > 0.0) continue;
            for (int iter = 0; iter < 200; ++iter) {
                double mid = 0.5 * (lo + hi);
                double fm = (*this)(mid);
                if (fm == 0.0) { lo = hi = mid; break; }
                if (flo * fm < 0.0) hi = mid;
                else { lo = mid; flo = fm; }
            }
            double r = 0.5 * (lo + hi);
            if (roots.empty() || std::abs(roots.back() - r) > 1e-12 * (1.0 + std::abs(r)))
                roots.push_back(r);
        }
        double fhi = (*this)(nodes.back());
        if (fhi == 0.0 && (roots.empty() || roots.back() != nodes.back()))
            roots.push_back(nodes.back());
        return roots;
    }

    /// max over [lo, hi] of |p|, from endpoints and interior stationary points.
    double sup_abs(double lo, double hi) const {
        double m = std::max(std::abs((*this)(lo)), std::abs((*this)(hi)));
        for (double r : derivative().real_roots())
            if (r > lo && r < hi) m = std::max(m, std::abs((*this)(r)));
        return m;
    }

    /// max over [lo, hi] of p (signed), same candidate set.
    double sup(double lo, double hi) const {
        double m = std::max((*this)(lo), (*this)(hi));
        for (double r : derivative().real_roots())
            if (r > lo && r < hi) m = std::max(m, (*this)(r));
        return m;
    }

private:
    void trim() {
        while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
    }

    std::vector<double> coeffs_;
};

} // namespace l0lab

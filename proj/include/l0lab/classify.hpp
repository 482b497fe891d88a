#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "l0lab/errors.hpp"
#include "l0lab/model.hpp"

namespace l0lab {

/// Per-coordinate log-likelihood ratio scores
///   score[i] = log q(x_i - mu) - log q(x_i + mu) = psi(x_i - mu) - psi(x_i + mu).
/// Computed as the psi difference so the normalizer cancels exactly.
inline std::vector<double> loglik_transform(const ProblemInstance& instance,
                                            std::span<const double> x) {
    const Polynomial& psi = instance.noise->psi();
    const double mu = instance.mu();
    std::vector<double> scores(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        scores[i] = psi(x[i] - mu) - psi(x[i] + mu);
    return scores;
}

/// Truncated summation: sum of the entries with the k largest and k smallest
/// removed. k = 0 is the plain sum. Requires 2k < d.
inline double tsum(std::span<const double> u, std::size_t k) {
    const std::size_t d = u.size();
    if (2 * k >= d)
        throw BudgetTooLarge("tsum requires 2k < d, got k=" + std::to_string(k) +
                             ", d=" + std::to_string(d));
    for (double v : u)
        if (std::isnan(v)) throw NonFinite("tsum input contains NaN");
    std::vector<double> s(u.begin(), u.end());
    std::sort(s.begin(), s.end(), std::greater<double>());
    double acc = 0.0;
    for (std::size_t i = k; i < d - k; ++i) acc += s[i];
    return acc;
}

/// Maximum-likelihood classifier: sign of the plain score sum, ties to -1.
inline int classify_ml(const ProblemInstance& instance, std::span<const double> x) {
    const std::vector<double> scores = loglik_transform(instance, x);
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum > 0.0 ? 1 : -1;
}

/// Truncated classifier C_k: sign of TSum_k of the scores, ties to -1.
inline int classify_truncated(const ProblemInstance& instance, std::span<const double> x,
                              std::size_t k) {
    const std::vector<double> scores = loglik_transform(instance, x);
    return tsum(scores, k) > 0.0 ? 1 : -1;
}

} // namespace l0lab

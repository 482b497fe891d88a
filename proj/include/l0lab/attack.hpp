#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "l0lab/classify.hpp"
#include "l0lab/errors.hpp"
#include "l0lab/model.hpp"
#include "l0lab/random.hpp"

namespace l0lab {

enum class Direction { minimize, maximize };

/// l0 budget k, optionally tied to an exponent alpha via k = floor(d^alpha).
struct AttackBudget {
    std::size_t k = 0;
    std::optional<double> alpha;
};

inline AttackBudget budget_from_alpha(std::size_t d, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0,1), got " + std::to_string(alpha));
    const double v = std::pow(static_cast<double>(d), alpha);
    const double snapped = std::round(v);
    // pow can land an ulp under an exact integer (e.g. 4096^0.5)
    const double floored = std::abs(v - snapped) < 1e-9 * std::max(1.0, snapped)
                               ? snapped
                               : std::floor(v);
    return AttackBudget{static_cast<std::size_t>(floored), alpha};
}

struct AttackOutcome {
    std::vector<double> perturbed;            // same length as the input
    std::vector<std::size_t> changed_indices; // |set| <= k
    bool reverted = false;                    // coupling attack only
    std::optional<double> worst_statistic;    // worst-case attacks only
};

namespace detail {

inline double sum_abs(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Indices of the m largest (descending=true) or smallest entries.
inline std::vector<std::size_t> extreme_indices(std::span<const double> v, std::size_t m,
                                                bool largest) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0u);
    auto cmp = [&](std::size_t a, std::size_t b) {
        return largest ? v[a] > v[b] : v[a] < v[b];
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), cmp);
    idx.resize(m);
    return idx;
}

} // namespace detail

/// Extremal value of TSum_k over all score vectors within l0 distance k of
/// `scores`, plus a realizing perturbation in score space. The closed form
/// (minimize: sum minus the 2k largest; maximize: sum minus the 2k smallest)
/// is realized by pushing the k most extreme coordinates to a sentinel beyond
/// every original score; the sentinels are truncated away, which leaves
/// exactly the closed-form surviving multiset.
inline std::pair<double, AttackOutcome> worst_case_tsum(std::span<const double> scores,
                                                        std::size_t k, Direction direction) {
    const std::size_t d = scores.size();
    if (2 * k >= d)
        throw BudgetTooLarge("worst_case_tsum requires 2k < d, got k=" + std::to_string(k) +
                             ", d=" + std::to_string(d));
    AttackOutcome outcome;
    outcome.perturbed.assign(scores.begin(), scores.end());
    if (k > 0) {
        const double margin = detail::max_abs(scores) + detail::sum_abs(scores) + 1.0;
        const bool minimize = direction == Direction::minimize;
        outcome.changed_indices = detail::extreme_indices(scores, k, /*largest=*/minimize);
        const double sentinel = minimize ? -margin : margin;
        for (std::size_t i : outcome.changed_indices) outcome.perturbed[i] = sentinel;
    }
    const double value = tsum(outcome.perturbed, k);
    outcome.worst_statistic = value;
    return {value, outcome};
}

/// Exhaustive oracle for worst_case_tsum: every index subset of size <= k,
/// every changed coordinate set to any of {below-min sentinel, above-max
/// sentinel, each existing score, midpoints of adjacent sorted scores}.
inline double brute_force_attack(std::span<const double> scores, std::size_t k,
                                 Direction direction) {
    const std::size_t d = scores.size();
    if (d > 12 || k > 2)
        throw InstanceTooLarge("brute_force_attack is limited to d <= 12, k <= 2");
    if (2 * k >= d)
        throw BudgetTooLarge("brute_force_attack requires 2k < d");

    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double pad = detail::sum_abs(scores) + 1.0;
    std::vector<double> candidates;
    candidates.push_back(sorted.front() - pad);
    candidates.push_back(sorted.back() + pad);
    for (double s : sorted) candidates.push_back(s);
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));

    const bool minimize = direction == Direction::minimize;
    double best = tsum(scores, k);
    std::vector<double> work(scores.begin(), scores.end());

    auto consider = [&](const std::vector<double>& v) {
        const double t = tsum(v, k);
        if (minimize ? t < best : t > best) best = t;
    };

    if (k >= 1) {
        for (std::size_t i = 0; i < d; ++i) {
            for (double a : candidates) {
                work.assign(scores.begin(), scores.end());
                work[i] = a;
                consider(work);
                if (k >= 2) {
                    for (std::size_t j = i + 1; j < d; ++j) {
                        for (double b : candidates) {
                            work[j] = b;
                            consider(work);
                        }
                        work[j] = scores[j];
                    }
                }
            }
        }
    }
    return best;
}

/// Push chosen coordinates of x to extreme values so that each replaced score
/// clears every original score by the margin sum|score| + 1 in the required
/// direction (direction -1 drives the score down, +1 up). Doubling search on
/// |x|; the score behaves like 4 n a mu x^(2n-1) for large |x|.
inline std::vector<double> realize_in_x_space(const ProblemInstance& instance,
                                              std::span<const double> x,
                                              std::span<const std::size_t> indices,
                                              std::span<const int> directions) {
    if (indices.size() != directions.size())
        throw std::invalid_argument("indices and directions must have equal length");
    for (std::size_t i : indices)
        if (i >= x.size()) throw std::invalid_argument("target index out of range");
    const std::vector<double> scores = loglik_transform(instance, x);
    const double margin = detail::sum_abs(scores) + 1.0;
    const double lo = *std::min_element(scores.begin(), scores.end());
    const double hi = *std::max_element(scores.begin(), scores.end());
    const Polynomial& psi = instance.noise->psi();
    const double mu = instance.mu();
    const double mu_sign = mu > 0.0 ? 1.0 : -1.0;

    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const int dir = directions[j];
        const double target = dir < 0 ? lo - margin : hi + margin;
        const double x_sign = static_cast<double>(dir) * mu_sign;
        double magnitude = std::max(1.0, 2.0 * detail::max_abs(x));
        bool done = false;
        for (int iter = 0; iter < 64; ++iter) {
            const double cand = x_sign * magnitude;
            const double score = psi(cand - mu) - psi(cand + mu);
            if ((dir < 0 && score < target) || (dir > 0 && score > target)) {
                out[indices[j]] = cand;
                done = true;
                break;
            }
            magnitude *= 2.0;
        }
        if (!done)
            throw ExtremeSearchFailed("64 doublings did not reach the score margin; mu=" +
                                      std::to_string(mu));
    }
    return out;
}

/// Full worst-case pipeline in x space: find the extremal-TSum attack on the
/// scores, realize it on x, and verify the realized trimmed sum matches.
inline std::vector<double> realize_worst_case(const ProblemInstance& instance,
                                              std::span<const double> x, std::size_t k,
                                              Direction direction) {
    const std::vector<double> scores = loglik_transform(instance, x);
    auto [value, outcome] = worst_case_tsum(scores, k, direction);
    std::vector<int> directions(outcome.changed_indices.size(),
                                direction == Direction::minimize ? -1 : 1);
    std::vector<double> out =
        realize_in_x_space(instance, x, outcome.changed_indices, directions);
    const double achieved = tsum(loglik_transform(instance, out), k);
    if (std::abs(achieved - value) > 1e-9 * std::max(1.0, std::abs(value)))
        throw ExtremeSearchFailed("realized TSum " + std::to_string(achieved) +
                                  " does not match the closed form " + std::to_string(value));
    return out;
}

/// Maximal-coupling attack: each coordinate is kept with the coupling
/// probability min(q(x-mu), q(x+mu)) / q(x - y mu) and zeroed otherwise; if
/// more than k coordinates changed, the original data is returned unchanged
/// with reverted set. Consumes exactly d uniforms from the stream.
inline AttackOutcome coupling_attack(const ProblemInstance& instance,
                                     const LabeledDataset& dataset, std::size_t k,
                                     RandomStream& stream) {
    const Polynomial& psi = instance.noise->psi();
    const double mu = instance.mu();
    const double y = static_cast<double>(dataset.label);
    AttackOutcome outcome;
    outcome.perturbed = dataset.samples;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const double x = dataset.samples[i];
        const double log_keep = std::min(psi(x - mu), psi(x + mu)) - psi(x - y * mu);
        const double u = stream.next_unit();
        if (log_keep < 0.0 && u > std::exp(log_keep) && x != 0.0) {
            outcome.perturbed[i] = 0.0;
            outcome.changed_indices.push_back(i);
        }
    }
    if (outcome.changed_indices.size() > k) {
        outcome.perturbed = dataset.samples;
        outcome.changed_indices.clear();
        outcome.reverted = true;
    }
    return outcome;
}

} // namespace l0lab

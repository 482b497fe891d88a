#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "l0lab/attack.hpp"
#include "l0lab/classify.hpp"
#include "l0lab/errors.hpp"
#include "l0lab/model.hpp"
#include "l0lab/noise.hpp"
#include "l0lab/normal.hpp"
#include "l0lab/random.hpp"

namespace l0lab {

enum class AttackKind { none, worst_case, coupling };
enum class ClassifierKind { ml, truncated };
enum class OutputFormat { csv, json };

inline const char* to_string(AttackKind a) {
    switch (a) {
        case AttackKind::none: return "none";
        case AttackKind::worst_case: return "worst_case";
        default: return "coupling";
    }
}

inline const char* to_string(ClassifierKind c) {
    return c == ClassifierKind::ml ? "ml" : "truncated";
}

inline AttackKind attack_from_string(const std::string& s) {
    if (s == "none") return AttackKind::none;
    if (s == "worst_case") return AttackKind::worst_case;
    if (s == "coupling") return AttackKind::coupling;
    throw std::invalid_argument("--attack must be none, worst_case or coupling, got '" + s + "'");
}

inline ClassifierKind classifier_from_string(const std::string& s) {
    if (s == "ml") return ClassifierKind::ml;
    if (s == "truncated") return ClassifierKind::truncated;
    throw std::invalid_argument("--classifier must be ml or truncated, got '" + s + "'");
}

struct ExperimentConfig {
    std::vector<double> poly{0.0, 0.0, -0.5};
    double c = 1.0;
    std::vector<std::size_t> dims;
    std::vector<double> alphas;
    std::vector<std::size_t> ks;
    AttackKind attack = AttackKind::none;
    ClassifierKind classifier = ClassifierKind::truncated;
    std::size_t trials = 20000;
    std::uint64_t master_seed = 0;
    std::size_t workers = 0;  // 0 = auto
    std::string out_path;     // empty = stdout
    OutputFormat format = OutputFormat::csv;

    void validate() const {
        if (trials < 100) throw std::invalid_argument("--trials must be at least 100");
        if (poly.empty()) throw std::invalid_argument("--poly must supply at least one coefficient");
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0))
                throw std::invalid_argument("--alphas entries must lie in (0,1)");
        if (!alphas.empty() && !ks.empty())
            throw std::invalid_argument("--alphas and --ks are mutually exclusive");
    }
};

/// One grid cell ready to run. `alpha` is recorded when the budget came from
/// an exponent; `cell_seed` fixes every random draw in the cell.
struct CellSpec {
    std::size_t d = 0;
    std::size_t k = 0;
    std::optional<double> alpha;
    ClassifierKind classifier = ClassifierKind::ml;
    AttackKind attack = AttackKind::none;
    std::size_t trials = 0;
    std::uint64_t cell_seed = 0;
};

struct CellResult {
    std::size_t d = 0;
    std::size_t k = 0;
    std::optional<double> alpha;
    ClassifierKind classifier = ClassifierKind::ml;
    AttackKind attack = AttackKind::none;
    std::size_t trials = 0;
    std::size_t errors = 0;
    double error_rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> revert_rate;
    std::uint64_t seed = 0;
    std::string status = "ok";
    double wall_time_s = 0.0;
};

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                                 double confidence = 0.95) {
    if (successes > trials) throw std::invalid_argument("successes must not exceed trials");
    if (trials == 0) return {0.0, 1.0};
    const double z = normal_two_sided_quantile(confidence);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // the boundary cases are exactly 0 and 1 algebraically
    const double low = successes == 0 ? 0.0 : std::clamp(center - half, 0.0, 1.0);
    const double high = successes == trials ? 1.0 : std::clamp(center + half, 0.0, 1.0);
    return {low, high};
}

namespace detail {

inline std::size_t effective_workers(std::size_t requested) {
    std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::size_t w = requested > 0 ? requested : hw;
    if (const char* env = std::getenv("L0LAB_WORKERS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) w = std::min<std::size_t>(w, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, w);
}

/// Sum of the entries with the k smallest and k largest removed;
/// selection-based so it is O(d) rather than a full sort.
inline double trimmed_sum_fast(std::vector<double>& buf, std::size_t k) {
    const std::size_t d = buf.size();
    double total = 0.0;
    if (k == 0) {
        for (double v : buf) total += v;
        return total;
    }
    auto kth = buf.begin() + static_cast<std::ptrdiff_t>(k);
    std::nth_element(buf.begin(), kth, buf.end());
    auto dk = buf.begin() + static_cast<std::ptrdiff_t>(d - k);
    std::nth_element(kth, dk, buf.end());
    for (auto it = kth; it != dk; ++it) total += *it;
    return total;
}

struct TrialOutcome {
    bool error = false;
    bool reverted = false;
};

/// One Monte Carlo trial. Draw order is fixed: label, d noise draws, then
/// (coupling only) d coupling uniforms, so results do not depend on workers.
inline TrialOutcome run_trial(const ProblemInstance& instance, const CellSpec& cell,
                              std::uint64_t trial, RandomStream& stream,
                              std::vector<double>& buf) {
    TrialOutcome out;
    const LabeledDataset data = generate(instance, std::nullopt, stream, cell.cell_seed, trial);

    if (cell.attack == AttackKind::coupling) {
        const AttackOutcome attacked = coupling_attack(instance, data, cell.k, stream);
        out.reverted = attacked.reverted;
        int predict;
        if (cell.classifier == ClassifierKind::ml) {
            predict = classify_ml(instance, attacked.perturbed);
        } else {
            buf = loglik_transform(instance, attacked.perturbed);
            predict = trimmed_sum_fast(buf, cell.k) > 0.0 ? 1 : -1;
        }
        out.error = predict != data.label;
        return out;
    }

    buf = loglik_transform(instance, data.samples);

    if (cell.attack == AttackKind::none) {
        const std::size_t trunc = cell.classifier == ClassifierKind::ml ? 0 : cell.k;
        const int predict = trimmed_sum_fast(buf, trunc) > 0.0 ? 1 : -1;
        out.error = predict != data.label;
        return out;
    }

    // Worst-case attack, evaluated analytically from the extremal trimmed sum.
    if (cell.classifier == ClassifierKind::ml) {
        if (cell.k >= 1) {
            // budget exceeds the (zero) truncation: the plain sum is unbounded
            // in both directions, so the attack always flips the decision.
            out.error = true;
        } else {
            double sum = 0.0;
            for (double v : buf) sum += v;
            out.error = data.label == 1 ? sum <= 0.0 : sum > 0.0;
        }
        return out;
    }

    const std::size_t d = buf.size();
    const std::size_t m = 2 * cell.k;
    double total = 0.0;
    for (double v : buf) total += v;
    double bottom = 0.0, top = 0.0;
    if (cell.k > 0) {
        auto mth = buf.begin() + static_cast<std::ptrdiff_t>(m);
        std::nth_element(buf.begin(), mth, buf.end());
        for (auto it = buf.begin(); it != mth; ++it) bottom += *it;
        auto dm = buf.begin() + static_cast<std::ptrdiff_t>(d - m);
        std::nth_element(mth, dm, buf.end());
        for (auto it = dm; it != buf.end(); ++it) top += *it;
    }
    const double min_stat = total - top;
    const double max_stat = total - bottom;
    out.error = data.label == 1 ? min_stat <= 0.0 : max_stat > 0.0;
    return out;
}

} // namespace detail

/// Run every trial of one cell, parallelized over trial ranges. Error and
/// revert counts are integers, so the result is identical for any worker
/// count.
inline CellResult run_cell(const ExpPolyNoise& noise, double c, const CellSpec& cell,
                           std::size_t workers_requested = 0) {
    if (cell.classifier == ClassifierKind::truncated && 2 * cell.k >= cell.d)
        throw BudgetTooLarge("truncated classifier requires 2k < d, got k=" +
                             std::to_string(cell.k) + ", d=" + std::to_string(cell.d));
    if (cell.k > cell.d)
        throw BudgetTooLarge("budget k=" + std::to_string(cell.k) + " exceeds d=" +
                             std::to_string(cell.d));

    const auto start = std::chrono::steady_clock::now();
    const ProblemInstance instance(cell.d, c, noise);
    const std::size_t workers =
        std::min(detail::effective_workers(workers_requested), std::max<std::size_t>(1, cell.trials));

    std::vector<std::size_t> error_counts(workers, 0), revert_counts(workers, 0);
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run_range = [&](std::size_t w, std::size_t begin, std::size_t end) {
        try {
            std::vector<double> buf;
            std::size_t errors = 0, reverts = 0;
            for (std::size_t t = begin; t < end; ++t) {
                RandomStream stream(cell.cell_seed, t);
                const detail::TrialOutcome o = detail::run_trial(instance, cell, t, stream, buf);
                errors += o.error ? 1 : 0;
                reverts += o.reverted ? 1 : 0;
            }
            error_counts[w] = errors;
            revert_counts[w] = reverts;
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (workers == 1) {
        run_range(0, 0, cell.trials);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (cell.trials + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(cell.trials, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_range, w, begin, end);
        }
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    CellResult r;
    r.d = cell.d;
    r.k = cell.k;
    r.alpha = cell.alpha;
    r.classifier = cell.classifier;
    r.attack = cell.attack;
    r.trials = cell.trials;
    r.errors = std::accumulate(error_counts.begin(), error_counts.end(), std::size_t{0});
    r.error_rate = static_cast<double>(r.errors) / static_cast<double>(cell.trials);
    std::tie(r.ci_low, r.ci_high) = wilson_interval(r.errors, cell.trials);
    if (cell.attack == AttackKind::coupling) {
        const std::size_t reverts =
            std::accumulate(revert_counts.begin(), revert_counts.end(), std::size_t{0});
        r.revert_rate = static_cast<double>(reverts) / static_cast<double>(cell.trials);
    }
    r.seed = cell.cell_seed;
    r.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Bayes-error estimate with no adversary: uniform labels, ML classifier.
inline CellResult estimate_standard_error(const ExpPolyNoise& noise, double c, std::size_t d,
                                          std::size_t trials, std::uint64_t master_seed,
                                          std::size_t workers = 0) {
    CellSpec cell;
    cell.d = d;
    cell.k = 0;
    cell.classifier = ClassifierKind::ml;
    cell.attack = AttackKind::none;
    cell.trials = trials;
    cell.cell_seed = derive_seed(master_seed, 0);
    return run_cell(noise, c, cell, workers);
}

/// Robust-error estimate under the configured adversary.
inline CellResult estimate_robust_error(const ExpPolyNoise& noise, double c, std::size_t d,
                                        std::size_t k, std::optional<double> alpha,
                                        ClassifierKind classifier, AttackKind attack,
                                        std::size_t trials, std::uint64_t master_seed,
                                        std::size_t workers = 0) {
    if (attack == AttackKind::none)
        throw std::invalid_argument("--attack must be worst_case or coupling for robust runs");
    CellSpec cell;
    cell.d = d;
    cell.k = k;
    cell.alpha = alpha;
    cell.classifier = classifier;
    cell.attack = attack;
    cell.trials = trials;
    cell.cell_seed = derive_seed(master_seed, 0);
    return run_cell(noise, c, cell, workers);
}

/// Full grid over dims x (alphas | ks). Rows come out ordered d ascending
/// then alpha/k ascending; failed cells are recorded with their error name in
/// the status column instead of aborting the grid.
inline std::vector<CellResult> phase_sweep(const ExpPolyNoise& noise, const ExperimentConfig& config) {
    config.validate();
    if (config.dims.empty()) throw std::invalid_argument("--dims must not be empty");
    if (config.alphas.empty() && config.ks.empty())
        throw std::invalid_argument("--alphas or --ks must be supplied");

    std::vector<std::size_t> dims = config.dims;
    std::sort(dims.begin(), dims.end());
    std::vector<double> alphas = config.alphas;
    std::sort(alphas.begin(), alphas.end());
    std::vector<std::size_t> ks = config.ks;
    std::sort(ks.begin(), ks.end());
    const std::size_t inner = config.alphas.empty() ? ks.size() : alphas.size();

    std::vector<CellResult> rows;
    std::uint64_t cell_index = 0;
    for (std::size_t d : dims) {
        for (std::size_t j = 0; j < inner; ++j, ++cell_index) {
            CellSpec cell;
            cell.d = d;
            if (config.alphas.empty()) {
                cell.k = ks[j];
            } else {
                const AttackBudget budget = budget_from_alpha(d, alphas[j]);
                cell.k = budget.k;
                cell.alpha = alphas[j];
            }
            cell.classifier = config.classifier;
            cell.attack = config.attack;
            cell.trials = config.trials;
            cell.cell_seed = derive_seed(config.master_seed, cell_index);
            try {
                rows.push_back(run_cell(noise, config.c, cell, config.workers));
            } catch (const Error& e) {
                CellResult failed;
                failed.d = cell.d;
                failed.k = cell.k;
                failed.alpha = cell.alpha;
                failed.classifier = cell.classifier;
                failed.attack = cell.attack;
                failed.trials = cell.trials;
                failed.seed = cell.cell_seed;
                failed.status = e.name();
                rows.push_back(failed);
            }
        }
    }
    return rows;
}

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace detail

inline constexpr const char* kCsvHeader =
    "d,k,alpha,classifier,attack,trials,errors,error_rate,ci_low,ci_high,revert_rate,seed,status";

/// Deterministic CSV emission: identical config and seed give byte-identical
/// output for any worker count.
inline std::string to_csv(const std::vector<CellResult>& rows) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const CellResult& r : rows) {
        const bool ok = r.status == "ok";
        out += std::to_string(r.d);
        out += ',';
        out += std::to_string(r.k);
        out += ',';
        if (r.alpha) out += detail::general(*r.alpha);
        out += ',';
        out += to_string(r.classifier);
        out += ',';
        out += to_string(r.attack);
        out += ',';
        out += std::to_string(r.trials);
        out += ',';
        out += std::to_string(r.errors);
        out += ',';
        if (ok) out += detail::fixed6(r.error_rate);
        out += ',';
        if (ok) out += detail::fixed6(r.ci_low);
        out += ',';
        if (ok) out += detail::fixed6(r.ci_high);
        out += ',';
        if (ok && r.revert_rate) out += detail::fixed6(*r.revert_rate);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += r.status;
        out += '\n';
    }
    return out;
}

inline nlohmann::json to_json(const CellResult& r) {
    nlohmann::json j;
    j["d"] = r.d;
    j["k"] = r.k;
    if (r.alpha) j["alpha"] = *r.alpha;
    j["classifier"] = to_string(r.classifier);
    j["attack"] = to_string(r.attack);
    j["trials"] = r.trials;
    j["errors"] = r.errors;
    j["error_rate"] = r.error_rate;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    if (r.revert_rate) j["revert_rate"] = *r.revert_rate;
    j["seed"] = r.seed;
    j["status"] = r.status;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

inline std::string to_json_report(const ExperimentConfig& config,
                                  const std::vector<CellResult>& rows) {
    nlohmann::json j;
    j["provenance"] = {
        {"poly", config.poly},
        {"c", config.c},
        {"attack", to_string(config.attack)},
        {"classifier", to_string(config.classifier)},
        {"trials", config.trials},
        {"master_seed", config.master_seed},
    };
    j["results"] = nlohmann::json::array();
    for (const CellResult& r : rows) j["results"].push_back(to_json(r));
    return j.dump(2) + "\n";
}

} // namespace l0lab

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "helpers.hpp"
#include "l0lab/attack.hpp"

using namespace l0lab;

namespace {

ExpPolyNoise gauss() { return new_exp_poly({0.0, 0.0, -0.5}); }

std::size_t l0_distance(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i] ? 1 : 0;
    return n;
}

} // namespace

TEST_SUITE_BEGIN("attack");

TEST_CASE("worst_case_tsum: hand-computed cases") {
    const std::vector<double> scores{10.0, 9.0, 1.0, 1.0};
    auto [lo, lo_out] = worst_case_tsum(scores, 1, Direction::minimize);
    CHECK(lo == 2.0);
    CHECK(lo_out.changed_indices.size() == 1);
    CHECK(l0_distance(lo_out.perturbed, scores) <= 1);
    auto [hi, hi_out] = worst_case_tsum(scores, 1, Direction::maximize);
    CHECK(hi == 19.0);
    auto [plain, plain_out] = worst_case_tsum(scores, 0, Direction::minimize);
    CHECK(plain == 21.0);
    CHECK(plain_out.changed_indices.empty());
    CHECK_THROWS_AS(worst_case_tsum(scores, 2, Direction::minimize), BudgetTooLarge);
}

TEST_CASE("brute_force_attack: hand-computed cases") {
    CHECK(brute_force_attack(std::vector<double>{10, 9, 1, 1}, 1, Direction::minimize) == 2.0);
    CHECK(brute_force_attack(std::vector<double>{10, 9, 1, 1}, 1, Direction::maximize) == 19.0);
    CHECK(brute_force_attack(std::vector<double>{1, 1, 1, 1, 1}, 1, Direction::minimize) == 3.0);
    CHECK(brute_force_attack(std::vector<double>{1, 2, 3}, 0, Direction::minimize) == 6.0);
    CHECK_THROWS_AS(brute_force_attack(std::vector<double>(13, 0.0), 1, Direction::minimize),
                    InstanceTooLarge);
}

TEST_CASE("oracle equivalence: closed form equals brute force exactly") {
    RandomStream rng(47, 0);
    int done = 0;
    while (done < 300) {
        const std::size_t d = 4 + rng.next_u64() % 7;  // 4..10
        const std::size_t k = rng.next_u64() % 3;      // 0..2
        if (2 * k >= d) continue;
        ++done;
        std::vector<double> scores(d);
        for (auto& s : scores) s = testutil::uniform(rng, -5.0, 5.0);
        for (Direction dir : {Direction::minimize, Direction::maximize}) {
            const double closed = worst_case_tsum(scores, k, dir).first;
            const double brute = brute_force_attack(scores, k, dir);
            CHECK(closed == brute);  // bitwise: both are trimmed sums of the same multiset
        }
    }
}

TEST_CASE("budget_from_alpha: floor semantics") {
    CHECK(budget_from_alpha(4096, 0.5).k == 64);
    CHECK(budget_from_alpha(4096, 0.3).k == 12);
    CHECK(budget_from_alpha(4096, 0.7).k == 337);
    CHECK(budget_from_alpha(1024, 0.8).k == 256);
    CHECK_THROWS_AS(budget_from_alpha(4096, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(budget_from_alpha(4096, 1.0), std::invalid_argument);
}

TEST_CASE("realize_worst_case: achieves the closed form in x space") {
    const ExpPolyNoise g = gauss();
    const ProblemInstance inst(6, 1.0, g);
    RandomStream rng(53, 0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(6);
        for (auto& v : x) v = testutil::uniform(rng, -2.0, 2.0);
        for (Direction dir : {Direction::minimize, Direction::maximize}) {
            const std::vector<double> attacked = realize_worst_case(inst, x, 2, dir);
            CHECK(l0_distance(attacked, x) <= 2);  // realize_worst_case verifies the value itself
        }
    }

    const ExpPolyNoise q = new_exp_poly({0.0, 0.0, 0.0, 0.0, -1.0});
    const ProblemInstance qi(100, 1.0, q);  // mu = 0.1
    std::vector<double> x(100);
    for (auto& v : x) v = testutil::uniform(rng, -1.0, 1.0);
    const std::vector<double> attacked = realize_worst_case(qi, x, 1, Direction::minimize);
    CHECK(l0_distance(attacked, x) <= 1);
}

TEST_CASE("realize_worst_case: negative signal constant") {
    const ExpPolyNoise g = gauss();
    const ProblemInstance inst(9, -1.5, g);  // mu < 0 flips the score monotonicity
    RandomStream rng(71, 0);
    std::vector<double> x(9);
    for (auto& v : x) v = testutil::uniform(rng, -2.0, 2.0);
    for (Direction dir : {Direction::minimize, Direction::maximize}) {
        const std::vector<double> attacked = realize_worst_case(inst, x, 2, dir);
        CHECK(l0_distance(attacked, x) <= 2);
    }
}

TEST_CASE("realize_worst_case: k=0 returns x unchanged") {
    const ExpPolyNoise g = gauss();
    const ProblemInstance inst(4, 1.0, g);
    const std::vector<double> x{0.4, -1.0, 2.0, 0.1};
    CHECK(realize_worst_case(inst, x, 0, Direction::minimize) == x);
}

TEST_CASE("realize_in_x_space: degenerate mean fails the doubling search") {
    const ExpPolyNoise g = gauss();
    const ProblemInstance inst(4, 1e-300, g);  // mu too small to move any score
    const std::vector<double> x{0.4, -1.0, 2.0, 0.1};
    const std::vector<std::size_t> idx{0};
    const std::vector<int> dirs{-1};
    CHECK_THROWS_AS(realize_in_x_space(inst, x, idx, dirs), ExtremeSearchFailed);
}

TEST_CASE("plain-sum fragility: one realized coordinate always flips classify_ml") {
    const ExpPolyNoise g = gauss();
    const ProblemInstance inst(16, 1.0, g);
    RandomStream rng(59, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        LabeledDataset data;
        RandomStream stream(60, static_cast<std::uint64_t>(rep));
        data = generate(inst, std::nullopt, stream);
        const int decision = classify_ml(inst, data.samples);
        const std::vector<std::size_t> idx{rng.next_u64() % 16};
        const std::vector<int> dirs{-decision};
        const std::vector<double> attacked = realize_in_x_space(inst, data.samples, idx, dirs);
        CHECK(classify_ml(inst, attacked) == -decision);
    }
}

TEST_CASE("coupling_attack: pointwise keep probabilities") {
    const ExpPolyNoise g = gauss();

    // symmetric point: q(-mu) = q(mu), keep probability 1
    const ProblemInstance inst1(1, 0.5, g);  // mu = 0.5
    LabeledDataset sym;
    sym.label = 1;
    sym.samples = {0.0};
    for (std::uint64_t t = 0; t < 2000; ++t) {
        RandomStream stream(61, t);
        const AttackOutcome out = coupling_attack(inst1, sym, 1, stream);
        CHECK(out.perturbed == sym.samples);
        CHECK(!out.reverted);
    }

    // gaussian, y=+1, mu=0.1, x=1: keep probability e^{-0.2}
    const ProblemInstance inst2(1, 0.1, g);  // d=1 so mu = c = 0.1
    LabeledDataset one;
    one.label = 1;
    one.samples = {1.0};
    std::size_t flips = 0;
    const std::size_t trials = 100000;
    for (std::uint64_t t = 0; t < trials; ++t) {
        RandomStream stream(62, t);
        const AttackOutcome out = coupling_attack(inst2, one, 1, stream);
        flips += out.changed_indices.empty() ? 0 : 1;
    }
    const double p_flip = 1.0 - std::exp(-0.2);
    const double se = std::sqrt(p_flip * (1.0 - p_flip) / static_cast<double>(trials));
    CHECK(std::abs(static_cast<double>(flips) / trials - p_flip) < 4.0 * se);
}

TEST_CASE("coupling_attack: vanishing mean never flips") {
    const ExpPolyNoise g = gauss();
    const ProblemInstance inst(8, 1e-15, g);
    RandomStream gen(63, 0);
    const LabeledDataset data = generate(inst, std::nullopt, gen);
    for (std::uint64_t t = 0; t < 1000; ++t) {
        RandomStream stream(64, t);
        const AttackOutcome out = coupling_attack(inst, data, 8, stream);
        CHECK(out.perturbed == data.samples);
        CHECK(!out.reverted);
    }
}

TEST_CASE("coupling_attack: flip rate matches total variation") {
    const ExpPolyNoise g = gauss();
    const std::size_t d = 4096;
    const ProblemInstance inst(d, 1.0, g);
    const double tv = g.tv_shifted(inst.mu());
    std::size_t flips = 0, coords = 0;
    for (std::uint64_t t = 0; t < 25; ++t) {  // 102400 coordinates
        RandomStream stream(65, t);
        const LabeledDataset data = generate(inst, std::nullopt, stream);
        const AttackOutcome out = coupling_attack(inst, data, d, stream);  // k=d: never revert
        flips += out.changed_indices.size();
        coords += d;
    }
    const double rate = static_cast<double>(flips) / static_cast<double>(coords);
    const double se = std::sqrt(tv * (1.0 - tv) / static_cast<double>(coords));
    CHECK(std::abs(rate - tv) < 4.0 * se);
}

TEST_CASE("coupling_attack: revert rate obeys the Markov bound") {
    const ExpPolyNoise g = gauss();
    const std::size_t d = 256;
    const ProblemInstance inst(d, 1.0, g);
    const std::size_t k = budget_from_alpha(d, 0.7).k;  // 48
    const double tv = g.tv_shifted(inst.mu());
    const std::size_t trials = 20000;
    std::size_t reverts = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        RandomStream stream(66, t);
        const LabeledDataset data = generate(inst, std::nullopt, stream);
        reverts += coupling_attack(inst, data, k, stream).reverted ? 1 : 0;
    }
    const double rate = static_cast<double>(reverts) / static_cast<double>(trials);
    const double markov = static_cast<double>(d) * tv / static_cast<double>(k);
    const double se = std::sqrt(0.25 / static_cast<double>(trials));
    CHECK(rate <= markov + 4.0 * se);
}

TEST_CASE("coupling_attack: attacked statistic is label independent") {
    const ExpPolyNoise g = gauss();
    const std::size_t d = 256;
    const ProblemInstance inst(d, 1.0, g);
    const std::size_t k = budget_from_alpha(d, 0.7).k;
    const std::size_t trials = 100000;
    std::vector<double> stat_plus, stat_minus;
    for (int label : {1, -1}) {
        auto& stats = label == 1 ? stat_plus : stat_minus;
        stats.reserve(trials);
        for (std::uint64_t t = 0; t < trials; ++t) {
            RandomStream stream(static_cast<std::uint64_t>(700 + label), t);
            const LabeledDataset data = generate(inst, label, stream);
            const AttackOutcome out = coupling_attack(inst, data, k, stream);
            if (out.reverted) continue;
            const std::vector<double> scores = loglik_transform(inst, out.perturbed);
            stats.push_back(tsum(scores, k));
        }
    }
    const double stat = testutil::ks_two_sample(stat_plus, stat_minus);
    CHECK(stat < testutil::ks_two_sample_critical(0.001, stat_plus.size(), stat_minus.size()));
}

TEST_CASE("property: attack outcomes respect the l0 budget") {
    const ExpPolyNoise g = gauss();
    const std::size_t d = 64;
    const ProblemInstance inst(d, 1.0, g);
    for (std::uint64_t t = 0; t < 200; ++t) {
        RandomStream stream(67, t);
        const LabeledDataset data = generate(inst, std::nullopt, stream);
        const std::size_t k = 1 + t % 20;
        const AttackOutcome out = coupling_attack(inst, data, k, stream);
        CHECK(out.changed_indices.size() <= k);
        CHECK(l0_distance(out.perturbed, data.samples) == out.changed_indices.size());

        const std::vector<double> scores = loglik_transform(inst, data.samples);
        if (2 * k < d) {
            const auto [value, wout] = worst_case_tsum(scores, k, Direction::minimize);
            CHECK(l0_distance(wout.perturbed, scores) <= k);
            CHECK(*wout.worst_statistic == value);
        }
    }
}

TEST_SUITE_END();

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlmr/analysis.hpp"
#include "mlmr/matching.hpp"
#include "mlmr/policies.hpp"
#include "mlmr/rng.hpp"
#include "test_instances.hpp"

using namespace mlmr;

namespace {

// Execute the init schedule against synthetic rewards; returns the state.
PolicyState run_init(std::size_t m, std::size_t n, double reward_value = 0.5) {
    PolicyState state(m, n);
    const std::vector<double> rewards(m, reward_value);
    for (const auto& matching : mlmr_init_schedule(m, n)) mlmr_update(state, matching, rewards);
    return state;
}

// Brute-force argmax of the index sum over all arms, lexicographically
// smallest among near-ties.
Matching argmax_over_arms(const Matrix& index) {
    auto arms = all_matchings(index.rows(), index.cols());
    double best = -1e300;
    std::vector<std::size_t> best_assignment;
    for (const auto& arm : arms) {
        double total = 0.0;
        for (std::size_t i = 0; i < arm.size(); ++i) total += index(i, arm[i]);
        if (total > best + 1e-9) {
            best = total;
            best_assignment = arm.assignment;
        } else if (total >= best - 1e-9 && arm.assignment < best_assignment) {
            best_assignment = arm.assignment;
        }
    }
    return Matching{best_assignment};
}

}  // namespace

TEST_CASE("init schedule shapes") {
    const auto single = mlmr_init_schedule(1, 2);
    REQUIRE(single.size() == 2);
    CHECK(single[0].assignment == std::vector<std::size_t>{0});
    CHECK(single[1].assignment == std::vector<std::size_t>{1});

    const auto square = mlmr_init_schedule(2, 2);
    REQUIRE(square.size() == 4);
    // Slot for pair (0,1): user 0 on resource 1 forces user 1 onto resource 0.
    CHECK(square[1].assignment == std::vector<std::size_t>{1, 0});
    for (const auto& m : square) CHECK(m.is_injective(2));
}

TEST_CASE("executed init schedule covers every pair") {
    const std::size_t m = 2, n = 4;
    const auto state = run_init(m, n);
    CHECK(state.t == m * n);
    std::uint64_t total = 0, smallest = UINT64_MAX;
    for (const auto c : state.counts) {
        total += c;
        smallest = std::min(smallest, c);
    }
    CHECK(smallest >= 1);
    CHECK(total == m * (m * n));  // M plays per slot, M*N slots
}

TEST_CASE("index matrix matches the bonus formula") {
    auto state = run_init(2, 4, 0.0);
    state.theta_hat.fill(0.0);
    state.counts.fill(1);
    state.t = 3;
    const auto schedule = ExplorationSchedule::constant(1.0);
    const auto index = mlmr_index(state, schedule);
    for (const double v : index) CHECK(v == doctest::Approx(std::sqrt(std::log(3.0))).epsilon(1e-15));

    // Independent recomputation of every entry for an asymmetric state.
    PolicyState rich(2, 3);
    rich.theta_hat = Matrix{{0.5, 0.1, 0.9}, {0.4, 0.2, 0.7}};
    rich.counts = Counts{{4, 1, 9}, {2, 5, 1}};
    rich.t = 55;
    const auto l303 = ExplorationSchedule::constant(303.0);
    const auto idx = mlmr_index(rich, l303);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            const double expected =
                rich.theta_hat(i, j) +
                std::sqrt(303.0 * std::log(55.0) / static_cast<double>(rich.counts(i, j)));
            CHECK(idx(i, j) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("index requires full initialization") {
    PolicyState state(2, 2);
    state.t = 1;
    state.counts(0, 0) = 1;  // others still zero
    CHECK_THROWS_AS(mlmr_index(state, ExplorationSchedule::constant(2.0)), NotInitialized);
}

TEST_CASE("choose picks a dominant pair and matches brute force") {
    auto state = run_init(2, 4, 0.1);
    state.theta_hat(1, 3) = 100.0;  // dominates every other index entry
    const auto schedule = ExplorationSchedule::constant(2.0);
    const auto chosen = mlmr_choose(state, schedule);
    CHECK(chosen[1] == 3);

    RandomStream rng(909);
    for (int trial = 0; trial < 40; ++trial) {
        PolicyState random_state(2, 4);
        for (auto& v : random_state.theta_hat) v = rng.next_double();
        for (auto& c : random_state.counts) c = 1 + rng.next_below(50);
        random_state.t = 10 + rng.next_below(1000);
        const auto index = mlmr_index(random_state, schedule);
        CHECK(mlmr_choose(random_state, schedule) == argmax_over_arms(index));
    }
}

TEST_CASE("choose with equal counts and true means picks the optimal arm") {
    auto state = run_init(2, 4, 0.0);
    state.theta_hat = mean_rewards(example1_instance());
    state.counts.fill(7);
    state.t = 56;
    const auto chosen = mlmr_choose(state, ExplorationSchedule::constant(303.0));
    CHECK(chosen.assignment == std::vector<std::size_t>{0, 2});
}

TEST_CASE("update keeps exact running means") {
    PolicyState state(1, 2);
    mlmr_update(state, Matching{{0}}, std::vector<double>{0.7});
    CHECK(state.theta_hat(0, 0) == 0.7);
    CHECK(state.counts(0, 0) == 1);
    CHECK(state.t == 1);

    mlmr_update(state, Matching{{0}}, std::vector<double>{0.9});
    CHECK(state.theta_hat(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(state.counts(0, 0) == 2);

    // 1000 random rewards into one cell: mean to 1e-12 against a summation
    // oracle.
    PolicyState cell(1, 1);
    RandomStream rng(31337);
    long double sum = 0.0L;
    for (int k = 0; k < 1000; ++k) {
        const double r = rng.next_double();
        sum += r;
        mlmr_update(cell, Matching{{0}}, std::vector<double>{r});
    }
    CHECK(cell.theta_hat(0, 0) ==
          doctest::Approx(static_cast<double>(sum / 1000.0L)).epsilon(1e-12));
    CHECK(cell.counts(0, 0) == 1000);
}

TEST_CASE("count conservation after T steps past initialization") {
    const auto instance = example1_instance();
    MlmrPolicy policy(2, 4, ExplorationSchedule::constant(2.0));
    RandomStream rng(5150);
    std::vector<ChainState> states(8);
    std::vector<double> rewards(2);
    const std::uint64_t horizon = 500;
    for (std::uint64_t step = 0; step < horizon; ++step) {
        const auto played = policy.choose(rng);
        for (std::size_t i = 0; i < 2; ++i)
            rewards[i] = step_chain(states[i * 4 + played[i]], instance.chain(i, played[i]), rng);
        policy.update(played, rewards);
    }
    const std::uint64_t past_init = horizon - 8;
    std::uint64_t total = 0;
    for (const auto c : policy.state().counts) total += c;
    CHECK(total == 2 * (past_init + 8));
}

TEST_CASE("policy is deterministic given the reward sequence") {
    const auto schedule = ExplorationSchedule::constant(303.0);
    MlmrPolicy a(2, 3, schedule), b(2, 3, schedule);
    RandomStream reward_stream(777);
    RandomStream unused_a(1), unused_b(1);
    for (int step = 0; step < 300; ++step) {
        const auto ca = a.choose(unused_a);
        const auto cb = b.choose(unused_b);
        CHECK(ca == cb);
        std::vector<double> rewards{reward_stream.next_double(), reward_stream.next_double()};
        a.update(ca, rewards);
        b.update(cb, rewards);
    }
}

TEST_CASE("adding a constant to every sample mean leaves the choice unchanged") {
    RandomStream rng(616);
    const auto schedule = ExplorationSchedule::constant(2.0);
    for (int trial = 0; trial < 25; ++trial) {
        PolicyState state(2, 4);
        for (auto& v : state.theta_hat) v = rng.next_double();
        for (auto& c : state.counts) c = 1 + rng.next_below(30);
        state.t = 9 + rng.next_below(500);
        PolicyState shifted = state;
        const double c = 5.0 * rng.next_double();
        for (auto& v : shifted.theta_hat) v += c;
        CHECK(mlmr_choose(state, schedule) == mlmr_choose(shifted, schedule));
    }
}

TEST_CASE("exploration bonus is monotone in t for non-decreasing schedules") {
    const auto schedules = {ExplorationSchedule::constant(2.0), ExplorationSchedule::log_log(5.0),
                            ExplorationSchedule::power(0.5, 0.5)};
    for (const auto& schedule : schedules) {
        double prev = 0.0;
        for (std::uint64_t t = 2; t < 2000; t += 17) {
            const double bonus = std::sqrt(schedule.at(t) * std::log(static_cast<double>(t)) / 7.0);
            CHECK(bonus >= prev);
            prev = bonus;
        }
    }
}

TEST_CASE("schedule forms validate and clamp") {
    CHECK_THROWS_AS(ExplorationSchedule::constant(0.0), ValidationError);
    CHECK_THROWS_AS(ExplorationSchedule::power(1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(ExplorationSchedule::power(1.0, 1.5), ValidationError);

    const auto clamped = ExplorationSchedule::log_log(100.0);
    CHECK(clamped.at(1) == 1.0);
    CHECK(clamped.at(5) == 5.0);

    const auto constant = ExplorationSchedule::constant(303.0);
    CHECK(constant.at(1) == 303.0);  // constants are never clamped

    // A raw sequence violating L(n) <= n is rejected where the policy uses it.
    auto state = run_init(2, 2, 0.3);
    const auto bad = ExplorationSchedule::sequence(
        [](std::uint64_t n) { return static_cast<double>(n) + 5.0; }, "n+5");
    CHECK_THROWS_AS(mlmr_index(state, bad), ValidationError);
}

TEST_CASE("mlmr stores two M x N tables regardless of the arm count") {
    MlmrPolicy policy(4, 8, ExplorationSchedule::constant(2.0));  // P(8,4) = 1680 arms
    CHECK(policy.state().theta_hat.size() == 32);
    CHECK(policy.state().counts.size() == 32);
}

TEST_CASE("ucb1 over arms: init phase and arm count") {
    Ucb1ArmsPolicy policy(2, 4);
    CHECK(policy.num_arms() == 12);
    RandomStream rng(8);
    std::vector<Matching> init_plays;
    for (int step = 0; step < 12; ++step) {
        const auto played = policy.choose(rng);
        init_plays.push_back(played);
        policy.update(played, std::vector<double>{0.1, 0.1});
    }
    std::sort(init_plays.begin(), init_plays.end());
    const auto arms = all_matchings(2, 4);
    for (std::size_t k = 0; k < 12; ++k) CHECK(init_plays[k] == arms[k]);

    CHECK_THROWS_AS(Ucb1ArmsPolicy(8, 20), CapExceeded);
}

TEST_CASE("ucb1 equals mlmr for a single user when L matches") {
    const auto schedule = ExplorationSchedule::constant(2.0);
    MlmrPolicy mlmr_policy(1, 2, schedule);
    Ucb1ArmsPolicy ucb_policy(1, 2, 2.0);
    RandomStream reward_stream(2024), unused(1);
    for (int step = 0; step < 200; ++step) {
        const auto cm = mlmr_policy.choose(unused);
        const auto cu = ucb_policy.choose(unused);
        CHECK(cm == cu);
        const std::vector<double> reward{reward_stream.next_double()};
        mlmr_policy.update(cm, reward);
        ucb_policy.update(cu, reward);
    }
}

TEST_CASE("ucb1 exploits a wide deterministic gap after init") {
    // Rewards far apart: the bonus cannot bridge the gap within the horizon.
    const Matrix rewards{{10.0, 0.1, 0.2}, {0.3, 9.0, 0.1}};
    const auto instance = single_state_instance(rewards);
    Ucb1ArmsPolicy policy(2, 3, 2.0);
    RandomStream rng(3);
    std::vector<double> obs(2);
    const auto best = max_weight_matching(rewards).matching;
    for (int step = 0; step < 500; ++step) {
        const auto played = policy.choose(rng);
        for (std::size_t i = 0; i < 2; ++i) obs[i] = rewards(i, played[i]);
        policy.update(played, obs);
        if (step >= 6) CHECK(played == best);
    }
    (void)instance;
}

TEST_CASE("oracle chooses the best static matching") {
    CHECK(oracle_choose(example1_instance()).assignment == std::vector<std::size_t>{0, 2});
    CHECK(oracle_choose(example2_instance()).assignment == std::vector<std::size_t>{0, 2});

    const Matrix rewards{{0.9, 0.1}, {0.2, 0.8}};
    CHECK(oracle_choose(single_state_instance(rewards)).assignment ==
          std::vector<std::size_t>{0, 1});
}

TEST_CASE("uniform random policy emits injective matchings uniformly") {
    UniformRandomPolicy policy(2, 4);
    RandomStream rng(99);
    std::vector<std::uint64_t> hits(12, 0);
    const auto arms = all_matchings(2, 4);
    const int draws = 60000;
    for (int k = 0; k < draws; ++k) {
        const auto m = policy.choose(rng);
        CHECK(m.is_injective(4));
        const auto it = std::find(arms.begin(), arms.end(), m);
        REQUIRE(it != arms.end());
        hits[static_cast<std::size_t>(it - arms.begin())] += 1;
    }
    for (const auto h : hits) {
        const double freq = static_cast<double>(h) / draws;
        CHECK(freq == doctest::Approx(1.0 / 12.0).epsilon(0.12));
    }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mlmr/errors.hpp"
#include "mlmr/grid.hpp"
#include "mlmr/markov.hpp"
#include "mlmr/matching.hpp"
#include "mlmr/policies.hpp"
#include "mlmr/rng.hpp"

namespace mlmr {

// mu[i][j] = sum_z theta_z * pi_z for each pair's stationary distribution.
inline Matrix mean_rewards(const ProblemInstance& instance) {
    Matrix mu(instance.num_users, instance.num_resources, 0.0);
    for (std::size_t i = 0; i < instance.num_users; ++i) {
        for (std::size_t j = 0; j < instance.num_resources; ++j) {
            const auto& spec = instance.chain(i, j);
            const auto pi = stationary_distribution(spec);
            double mean = 0.0;
            for (std::size_t z = 0; z < spec.num_states; ++z) mean += spec.rewards[z] * pi[z];
            mu(i, j) = mean;
        }
    }
    return mu;
}

struct GapReport {
    double delta_min = 0.0;  // over strictly suboptimal arms
    double delta_max = 0.0;  // over all arms
    Matrix per_pair;         // min gap over suboptimal arms containing (i,j); +inf if none
};

// Arm gaps by enumeration. Arms within 1e-9 of mu* count as optimal, so ties
// from exact-arithmetic instances do not produce a spurious tiny delta_min.
// Pairs appearing only in optimal arms get +inf in per_pair.
inline GapReport gaps(const ProblemInstance& instance, const Matrix& mu,
                      std::uint64_t cap = kDefaultEnumerationCap) {
    MatchingEnumeration en(instance.num_users, instance.num_resources, cap);
    std::vector<Matching> arms;
    arms.reserve(en.count());
    std::vector<double> values;
    values.reserve(en.count());
    double mu_star = -std::numeric_limits<double>::infinity();
    while (auto arm = en.next()) {
        double value = 0.0;
        for (std::size_t i = 0; i < arm->size(); ++i) value += mu(i, (*arm)[i]);
        mu_star = std::max(mu_star, value);
        arms.push_back(std::move(*arm));
        values.push_back(value);
    }

    const double tie_tol = 1e-9 * std::max(1.0, std::abs(mu_star));
    GapReport report;
    report.per_pair = Matrix(instance.num_users, instance.num_resources,
                             std::numeric_limits<double>::infinity());
    double delta_min = std::numeric_limits<double>::infinity();
    double delta_max = 0.0;
    for (std::size_t k = 0; k < arms.size(); ++k) {
        const double delta = mu_star - values[k];
        delta_max = std::max(delta_max, delta);
        if (delta <= tie_tol) continue;  // optimal arm
        delta_min = std::min(delta_min, delta);
        for (std::size_t i = 0; i < arms[k].size(); ++i) {
            double& cell = report.per_pair(i, arms[k][i]);
            cell = std::min(cell, delta);
        }
    }
    if (!std::isfinite(delta_min))
        throw AllArmsOptimal("gaps: every arm attains mu*; delta_min undefined");
    report.delta_min = delta_min;
    report.delta_max = delta_max;
    return report;
}

inline GapReport gaps(const ProblemInstance& instance,
                      std::uint64_t cap = kDefaultEnumerationCap) {
    return gaps(instance, mean_rewards(instance), cap);
}

// Every scalar the bound expressions consume, computed exactly from the
// instance. eps values follow the two-state convention and may exceed 1.
struct InstanceAnalysis {
    Matrix mu;
    double mu_star = 0.0;
    Matching optimal_matching;
    double delta_min = 0.0;
    double delta_max = 0.0;
    Matrix delta_min_pair;
    double pi_min = 1.0;
    std::size_t s_max = 0;
    std::size_t s_min = 0;
    double theta_max = 0.0;
    double theta_min = 0.0;
    double eps_max = 0.0;
    double eps_min = 0.0;
    double a_bound = 0.0;  // additive constant surrogate: sum of all rewards / pi_min
    std::size_t num_users = 0;
    std::size_t num_resources = 0;
};

inline InstanceAnalysis analyze_instance(const ProblemInstance& instance,
                                         std::uint64_t cap = kDefaultEnumerationCap) {
    instance.validate();
    InstanceAnalysis a;
    a.num_users = instance.num_users;
    a.num_resources = instance.num_resources;
    a.mu = mean_rewards(instance);

    const auto best = max_weight_matching(a.mu);
    a.optimal_matching = best.matching;
    a.mu_star = best.total;

    const auto gap_report = gaps(instance, a.mu, cap);
    a.delta_min = gap_report.delta_min;
    a.delta_max = gap_report.delta_max;
    a.delta_min_pair = gap_report.per_pair;

    a.pi_min = std::numeric_limits<double>::infinity();
    a.s_max = 0;
    a.s_min = std::numeric_limits<std::size_t>::max();
    a.theta_max = -std::numeric_limits<double>::infinity();
    a.theta_min = std::numeric_limits<double>::infinity();
    a.eps_max = -std::numeric_limits<double>::infinity();
    a.eps_min = std::numeric_limits<double>::infinity();
    double reward_sum = 0.0;
    for (const auto& spec : instance.chains) {
        for (const double pi : stationary_distribution(spec)) a.pi_min = std::min(a.pi_min, pi);
        a.s_max = std::max(a.s_max, spec.num_states);
        a.s_min = std::min(a.s_min, spec.num_states);
        for (const double r : spec.rewards) {
            a.theta_max = std::max(a.theta_max, r);
            a.theta_min = std::min(a.theta_min, r);
            reward_sum += r;
        }
        const double eps = eigenvalue_gap(spec);
        a.eps_max = std::max(a.eps_max, eps);
        a.eps_min = std::min(a.eps_min, eps);
    }
    a.a_bound = reward_sum / a.pi_min;
    return a;
}

// Smallest constant L admitted by the logarithmic-regret guarantee:
// (50 + 40M) * theta_max^2 * s_max^2 / eps_min.
inline double l_threshold(const InstanceAnalysis& a) {
    return (50.0 + 40.0 * static_cast<double>(a.num_users)) * a.theta_max * a.theta_max *
           static_cast<double>(a.s_max) * static_cast<double>(a.s_max) / a.eps_min;
}

inline double l_threshold(const ProblemInstance& instance) {
    return l_threshold(analyze_instance(instance));
}

// Constant-L regret upper bound at horizon n:
// [4 M^3 N L ln n / delta_min^2 + MN
//  + M^2 N (s_max/pi_min) (1 + eps_max sqrt(L) / (10 s_min theta_min)) (pi/3)]
// * delta_max + a_bound.
inline double constant_l_bound(const InstanceAnalysis& a, double l_value, std::uint64_t n) {
    if (n < 1) throw ValidationError("constant-L bound: n must be >= 1");
    const double threshold = l_threshold(a);
    if (l_value < threshold)
        throw ThresholdViolated("constant-L bound: L = " + std::to_string(l_value) +
                                " below threshold " + std::to_string(threshold));
    const double m = static_cast<double>(a.num_users);
    const double nn = static_cast<double>(a.num_resources);
    const double log_n = std::log(static_cast<double>(n));
    const double log_term = 4.0 * m * m * m * nn * l_value * log_n / (a.delta_min * a.delta_min);
    const double tail_term = m * m * nn * (static_cast<double>(a.s_max) / a.pi_min) *
                             (1.0 + a.eps_max * std::sqrt(l_value) /
                                        (10.0 * static_cast<double>(a.s_min) * a.theta_min)) *
                             (std::numbers::pi / 3.0);
    return (log_term + m * nn + tail_term) * a.delta_max + a.a_bound;
}

inline double constant_l_bound(const ProblemInstance& instance, double l_value, std::uint64_t n) {
    return constant_l_bound(analyze_instance(instance), l_value, n);
}

inline constexpr std::uint64_t kDivergenceScanCap = 1'000'000'000;

// First slot where the schedule clears the divergence threshold
// (60 + 40M) theta_max^2 s_max^2 / eps_min. The schedule is non-decreasing,
// so the scan gallops and bisects instead of walking every t; the cap and
// the result are the same as a literal forward scan.
inline std::uint64_t schedule_crossing_slot(const InstanceAnalysis& a, const ExplorationSchedule& schedule,
                                 std::uint64_t cap = kDivergenceScanCap) {
    const double target = (60.0 + 40.0 * static_cast<double>(a.num_users)) * a.theta_max *
                          a.theta_max * static_cast<double>(a.s_max) *
                          static_cast<double>(a.s_max) / a.eps_min;
    if (schedule.at(1) >= target) return 1;
    if (schedule.at(cap) < target)
        throw DivergenceCapExceeded("schedule bound: L(t) stays below " + std::to_string(target) +
                                    " up to t = " + std::to_string(cap));
    std::uint64_t lo = 1, hi = 2;  // L(lo) < target <= L(hi) once found
    double prev = schedule.at(lo);
    while (hi < cap && schedule.at(hi) < target) {
        const double cur = schedule.at(hi);
        if (cur < prev)
            throw ValidationError("schedule: not non-decreasing near t=" + std::to_string(hi));
        prev = cur;
        lo = hi;
        hi = (hi > cap / 2) ? cap : hi * 2;
    }
    while (lo + 1 < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (schedule.at(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

// Finite-sum constant from the diverging-schedule analysis:
// B = 1 + M (s_max/pi_min) (1 + eps_max/(10 s_min theta_min))
//       * sum_{t=1}^{t1-1} 2 t^(-(L(t) eps_min - (40M+10) s^2 th^2)/(20 s^2 th^2) + 1/2).
inline double schedule_burn_in_constant(const InstanceAnalysis& a, const ExplorationSchedule& schedule,
                                  std::uint64_t t1) {
    const double s2t2 = static_cast<double>(a.s_max) * static_cast<double>(a.s_max) *
                        a.theta_max * a.theta_max;
    double sum = 0.0;
    for (std::uint64_t t = 1; t < t1; ++t) {
        const double exponent =
            -(schedule.at(t) * a.eps_min - (40.0 * static_cast<double>(a.num_users) + 10.0) * s2t2) /
                (20.0 * s2t2) +
            0.5;
        sum += 2.0 * std::pow(static_cast<double>(t), exponent);
    }
    const double m = static_cast<double>(a.num_users);
    return 1.0 + m * (static_cast<double>(a.s_max) / a.pi_min) *
                     (1.0 + a.eps_max / (10.0 * static_cast<double>(a.s_min) * a.theta_min)) * sum;
}

// Diverging-schedule regret upper bound at horizon n:
// [4 M^3 N L(n) ln n / delta_min^2 + MN * B
//  + M^2 N (s_max/pi_min) (1 + eps_max/(10 s_min theta_min)) (pi/3)]
// * delta_max + a_bound.
inline double schedule_l_bound(const InstanceAnalysis& a, const ExplorationSchedule& schedule,
                             std::uint64_t n, std::uint64_t cap = kDivergenceScanCap) {
    if (n < 1) throw ValidationError("schedule bound: n must be >= 1");
    const std::uint64_t t1 = schedule_crossing_slot(a, schedule, cap);
    const double b_constant = schedule_burn_in_constant(a, schedule, t1);
    const double m = static_cast<double>(a.num_users);
    const double nn = static_cast<double>(a.num_resources);
    const double log_n = std::log(static_cast<double>(n));
    const double log_term =
        4.0 * m * m * m * nn * schedule.at(n) * log_n / (a.delta_min * a.delta_min);
    const double tail_term = m * m * nn * (static_cast<double>(a.s_max) / a.pi_min) *
                             (1.0 + a.eps_max / (10.0 * static_cast<double>(a.s_min) * a.theta_min)) *
                             (std::numbers::pi / 3.0);
    return (log_term + m * nn * b_constant + tail_term) * a.delta_max + a.a_bound;
}

inline double schedule_l_bound(const ProblemInstance& instance, const ExplorationSchedule& schedule,
                             std::uint64_t n, std::uint64_t cap = kDivergenceScanCap) {
    return schedule_l_bound(analyze_instance(instance), schedule, n, cap);
}

// One simulated run: cumulative reward, realized regret t*mu_star - reward,
// and the play-count matrix, recorded at the requested checkpoints.
struct RunTrace {
    std::vector<std::uint64_t> steps;
    std::vector<double> cumulative_reward;
    std::vector<double> regret;
    std::vector<Counts> counts;
};

// Default snapshot points: powers of two up to the horizon, plus the horizon.
inline std::vector<std::uint64_t> default_checkpoints(std::uint64_t horizon) {
    std::vector<std::uint64_t> steps;
    for (std::uint64_t s = 1; s <= horizon; s *= 2) {
        steps.push_back(s);
        if (s > horizon / 2) break;
    }
    if (steps.empty() || steps.back() != horizon) steps.push_back(horizon);
    return steps;
}

// Draw order per slot is fixed (policy draw first, then chains in user
// order), which is the reproducibility contract for a given stream.
inline RunTrace regret_trace(const ProblemInstance& instance, Policy& policy,
                             std::uint64_t horizon, RandomStream& rng,
                             std::span<const std::uint64_t> checkpoints = {}) {
    const std::size_t m = instance.num_users;
    const std::size_t n = instance.num_resources;
    if (horizon < m * n)
        throw ValidationError("run: horizon must be >= M*N so initialization fits");

    std::vector<std::uint64_t> default_steps;
    if (checkpoints.empty()) {
        default_steps = default_checkpoints(horizon);
        checkpoints = default_steps;
    }

    const Matrix mu = mean_rewards(instance);
    const double mu_star = max_weight_matching(mu).total;

    std::vector<ChainState> states(m * n);
    Counts counts(m, n, 0);
    std::vector<double> rewards(m, 0.0);
    double cumulative = 0.0;

    RunTrace trace;
    trace.steps.reserve(checkpoints.size());
    std::size_t next_checkpoint = 0;
    for (std::uint64_t step = 1; step <= horizon; ++step) {
        const Matching played = policy.choose(rng);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = played[i];
            rewards[i] = step_chain(states[i * n + j], instance.chain(i, j), rng);
            counts(i, j) += 1;
        }
        policy.update(played, rewards);
        for (std::size_t i = 0; i < m; ++i) cumulative += rewards[i];
        while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == step) {
            trace.steps.push_back(step);
            trace.cumulative_reward.push_back(cumulative);
            trace.regret.push_back(static_cast<double>(step) * mu_star - cumulative);
            trace.counts.push_back(counts);
            ++next_checkpoint;
        }
    }
    return trace;
}

}  // namespace mlmr

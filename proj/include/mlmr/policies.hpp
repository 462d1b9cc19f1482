#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlmr/errors.hpp"
#include "mlmr/grid.hpp"
#include "mlmr/markov.hpp"
#include "mlmr/matching.hpp"
#include "mlmr/rng.hpp"

namespace mlmr {

// Everything MLMR learns: per-pair sample means, per-pair play counts, and
// the global slot counter. Theta(M*N) numbers no matter how many arms the
// instance has.
struct PolicyState {
    Matrix theta_hat;  // M x N sample means
    Counts counts;     // M x N play counts
    std::uint64_t t = 0;

    PolicyState() = default;
    PolicyState(std::size_t num_users, std::size_t num_resources)
        : theta_hat(num_users, num_resources, 0.0), counts(num_users, num_resources, 0) {}

    std::size_t num_users() const { return theta_hat.rows(); }
    std::size_t num_resources() const { return theta_hat.cols(); }
};

// Exploration constant or diverging sequence for the index bonus.
// constant(L) is used as-is; the named sequence forms are clamped to
// L(n) <= n so they stay admissible for the policy.
class ExplorationSchedule {
public:
    static ExplorationSchedule constant(double l_value) {
        if (!(l_value > 0.0)) throw ValidationError("schedule: constant L must be positive");
        ExplorationSchedule s;
        s.constant_ = l_value;
        s.label_ = "constant(" + std::to_string(l_value) + ")";
        return s;
    }

    // c * ln(ln(n+e)), clamped to n.
    static ExplorationSchedule log_log(double c) {
        if (!(c > 0.0)) throw ValidationError("schedule: log_log coefficient must be positive");
        ExplorationSchedule s;
        s.eval_ = [c](std::uint64_t n) {
            const double x = static_cast<double>(n);
            return std::min(c * std::log(std::log(x + std::exp(1.0))), x);
        };
        s.label_ = "log_log(" + std::to_string(c) + ")";
        return s;
    }

    // c * n^a with a in (0,1], clamped to n.
    static ExplorationSchedule power(double c, double a) {
        if (!(c > 0.0)) throw ValidationError("schedule: power coefficient must be positive");
        if (!(a > 0.0 && a <= 1.0)) throw ValidationError("schedule: power exponent must be in (0,1]");
        ExplorationSchedule s;
        s.eval_ = [c, a](std::uint64_t n) {
            const double x = static_cast<double>(n);
            return std::min(c * std::pow(x, a), x);
        };
        s.label_ = "power(" + std::to_string(c) + "," + std::to_string(a) + ")";
        return s;
    }

    // Arbitrary evaluator; must be non-decreasing. L(n) <= n is checked where
    // the policy consumes it.
    static ExplorationSchedule sequence(std::function<double(std::uint64_t)> eval, std::string label) {
        ExplorationSchedule s;
        s.eval_ = std::move(eval);
        s.label_ = std::move(label);
        return s;
    }

    bool is_constant() const { return !eval_; }

    double at(std::uint64_t n) const {
        if (is_constant()) return constant_;
        const double l = eval_(n);
        if (!(l > 0.0)) throw ValidationError("schedule: L(n) must be positive (n=" + std::to_string(n) + ")");
        return l;
    }

    const std::string& label() const { return label_; }

private:
    double constant_ = 0.0;
    std::function<double(std::uint64_t)> eval_;
    std::string label_;
};

// The M*N initialization plays: slot for pair (p,q), in row-major order of
// (p,q), is a matching containing (p,q), completed by the cyclic shift
// user (p+d) mod M -> resource (q+d) mod N for d = 1..M-1. After the full
// schedule every pair has been played at least once.
inline std::vector<Matching> mlmr_init_schedule(std::size_t num_users, std::size_t num_resources) {
    if (num_users == 0 || num_users > num_resources)
        throw ValidationError("init schedule: need 1 <= M <= N");
    std::vector<Matching> schedule;
    schedule.reserve(num_users * num_resources);
    for (std::size_t p = 0; p < num_users; ++p) {
        for (std::size_t q = 0; q < num_resources; ++q) {
            std::vector<std::size_t> assignment(num_users);
            for (std::size_t d = 0; d < num_users; ++d)
                assignment[(p + d) % num_users] = (q + d) % num_resources;
            schedule.push_back(Matching{std::move(assignment)});
        }
    }
    return schedule;
}

// Index matrix: theta_hat[i][j] + sqrt(L_eff * ln(t) / counts[i][j]) with
// L_eff the schedule value at the current slot counter.
inline Matrix mlmr_index(const PolicyState& state, const ExplorationSchedule& schedule) {
    if (state.t < 1) throw NotInitialized("index: no plays recorded yet");
    for (const auto c : state.counts)
        if (c == 0) throw NotInitialized("index: some pair has never been played");
    const double l_eff = schedule.at(state.t);
    if (!schedule.is_constant() && l_eff > static_cast<double>(state.t))
        throw ValidationError("schedule: L(n) <= n violated at n=" + std::to_string(state.t));
    const double log_t = std::log(static_cast<double>(state.t));
    Matrix index(state.num_users(), state.num_resources(), 0.0);
    for (std::size_t i = 0; i < state.num_users(); ++i)
        for (std::size_t j = 0; j < state.num_resources(); ++j)
            index(i, j) = state.theta_hat(i, j) +
                          std::sqrt(l_eff * log_t / static_cast<double>(state.counts(i, j)));
    return index;
}

inline Matching mlmr_choose(const PolicyState& state, const ExplorationSchedule& schedule,
                            MatchingSolver& solver) {
    return solver.solve(mlmr_index(state, schedule)).matching;
}

inline Matching mlmr_choose(const PolicyState& state, const ExplorationSchedule& schedule) {
    MatchingSolver solver;
    return mlmr_choose(state, schedule, solver);
}

// Running-mean update for the played pairs; every other entry is untouched.
inline void mlmr_update(PolicyState& state, const Matching& played,
                        std::span<const double> rewards) {
    for (std::size_t i = 0; i < played.size(); ++i) {
        const std::size_t j = played[i];
        const auto n_prev = state.counts(i, j);
        state.theta_hat(i, j) =
            (state.theta_hat(i, j) * static_cast<double>(n_prev) + rewards[i]) /
            static_cast<double>(n_prev + 1);
        state.counts(i, j) = n_prev + 1;
    }
    state.t += 1;
}

// Harness-facing interface. choose() may draw from the stream (the random
// baseline does); update() feeds back the observed per-user rewards for the
// matching that was just played.
class Policy {
public:
    virtual ~Policy() = default;
    virtual Matching choose(RandomStream& rng) = 0;
    virtual void update(const Matching& played, std::span<const double> rewards) = 0;
};

class MlmrPolicy : public Policy {
public:
    MlmrPolicy(std::size_t num_users, std::size_t num_resources, ExplorationSchedule schedule)
        : state_(num_users, num_resources),
          schedule_(std::move(schedule)),
          init_(mlmr_init_schedule(num_users, num_resources)) {}

    Matching choose(RandomStream&) override {
        if (state_.t < init_.size()) return init_[state_.t];
        return mlmr_choose(state_, schedule_, solver_);
    }

    void update(const Matching& played, std::span<const double> rewards) override {
        mlmr_update(state_, played, rewards);
    }

    const PolicyState& state() const { return state_; }

private:
    PolicyState state_;
    ExplorationSchedule schedule_;
    std::vector<Matching> init_;
    MatchingSolver solver_;
};

// UCB1 applied to each matching as an opaque arm, dependencies ignored.
// Storage and time are linear in P(N,M), which is why the enumeration cap
// guards construction. Uses the same L convention as MLMR so runs compare
// like for like; L = 2 matches the classical UCB1 bonus.
class Ucb1ArmsPolicy : public Policy {
public:
    Ucb1ArmsPolicy(std::size_t num_users, std::size_t num_resources, double l_value = 2.0,
                   std::uint64_t cap = kDefaultEnumerationCap)
        : arms_(all_matchings(num_users, num_resources, cap)),
          mean_(arms_.size(), 0.0),
          plays_(arms_.size(), 0),
          l_value_(l_value) {}

    Matching choose(RandomStream&) override {
        if (t_ < arms_.size()) {
            last_ = t_;
            return arms_[t_];
        }
        const double log_t = std::log(static_cast<double>(t_));
        std::size_t best = 0;
        double best_index = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < arms_.size(); ++k) {
            const double idx = mean_[k] + std::sqrt(l_value_ * log_t / static_cast<double>(plays_[k]));
            if (idx > best_index) {
                best_index = idx;
                best = k;
            }
        }
        last_ = best;
        return arms_[best];
    }

    void update(const Matching& played, std::span<const double> rewards) override {
        std::size_t k = last_;
        if (!(k < arms_.size()) || !(arms_[k] == played)) {
            k = 0;
            while (k < arms_.size() && !(arms_[k] == played)) ++k;
            if (k == arms_.size()) throw ValidationError("ucb1: update for an unknown matching");
        }
        double total = 0.0;
        for (const double r : rewards) total += r;
        mean_[k] = (mean_[k] * static_cast<double>(plays_[k]) + total) /
                   static_cast<double>(plays_[k] + 1);
        plays_[k] += 1;
        t_ += 1;
    }

    std::size_t num_arms() const { return arms_.size(); }

private:
    std::vector<Matching> arms_;
    std::vector<double> mean_;
    std::vector<std::uint64_t> plays_;
    double l_value_;
    std::uint64_t t_ = 0;
    std::size_t last_ = static_cast<std::size_t>(-1);
};

// Best static matching on the true mean rewards; what regret is measured
// against.
inline Matching oracle_choose(const ProblemInstance& instance) {
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
    return max_weight_matching(mu).matching;
}

class OraclePolicy : public Policy {
public:
    explicit OraclePolicy(const ProblemInstance& instance) : fixed_(oracle_choose(instance)) {}
    explicit OraclePolicy(Matching fixed) : fixed_(std::move(fixed)) {}

    Matching choose(RandomStream&) override { return fixed_; }
    void update(const Matching&, std::span<const double>) override {}

private:
    Matching fixed_;
};

// Uniform over all P(N,M) injective assignments, drawn by partial
// Fisher-Yates; never enumerates the arm set.
class UniformRandomPolicy : public Policy {
public:
    UniformRandomPolicy(std::size_t num_users, std::size_t num_resources)
        : num_users_(num_users), pool_(num_resources) {}

    Matching choose(RandomStream& rng) override {
        for (std::size_t r = 0; r < pool_.size(); ++r) pool_[r] = r;
        std::vector<std::size_t> assignment(num_users_);
        for (std::size_t i = 0; i < num_users_; ++i) {
            const std::size_t pick = i + rng.next_below(pool_.size() - i);
            std::swap(pool_[i], pool_[pick]);
            assignment[i] = pool_[i];
        }
        return Matching{std::move(assignment)};
    }

    void update(const Matching&, std::span<const double>) override {}

private:
    std::size_t num_users_;
    std::vector<std::size_t> pool_;
};

}  // namespace mlmr

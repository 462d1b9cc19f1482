#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mlmr/eigen.hpp"
#include "mlmr/errors.hpp"
#include "mlmr/grid.hpp"
#include "mlmr/rng.hpp"

namespace mlmr {

// Structural checks can be skipped by callers who assert validity themselves
// (e.g. generated chains known irreducible by construction).
enum class ChainChecks { strict, assume_valid };

// One user-resource pair's rested reward chain: state space, row-stochastic
// transition matrix, and a reward per state.
struct ChainSpec {
    std::size_t num_states = 0;
    Matrix transition;            // num_states x num_states
    std::vector<double> rewards;  // length num_states, non-negative

    void validate(ChainChecks checks = ChainChecks::strict) const;
};

// Position of one chain. Advances only when its pair is played; every run
// starts every chain in state 0.
struct ChainState {
    std::size_t current = 0;
};

// The M x N grid of mutually independent chains defining a bandit problem.
struct ProblemInstance {
    std::size_t num_users = 0;      // M
    std::size_t num_resources = 0;  // N >= M
    std::vector<ChainSpec> chains;  // row-major, M*N entries

    const ChainSpec& chain(std::size_t user, std::size_t resource) const {
        return chains[user * num_resources + resource];
    }
    ChainSpec& chain(std::size_t user, std::size_t resource) {
        return chains[user * num_resources + resource];
    }

    void validate(ChainChecks checks = ChainChecks::strict) const {
        if (num_users == 0) throw ValidationError("instance: users must be positive");
        if (num_users > num_resources) throw ValidationError("instance: M <= N violated");
        if (chains.size() != num_users * num_resources)
            throw ValidationError("instance: expected M*N chains, got " + std::to_string(chains.size()));
        for (const auto& c : chains) c.validate(checks);
    }
};

namespace detail {

// Reachability over the positive-entry digraph, following rows (forward) or
// columns (backward).
inline std::vector<char> reach(const Matrix& p, bool forward) {
    const std::size_t n = p.rows();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
            const double w = forward ? p(u, v) : p(v, u);
            if (w > 0.0 && !seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

inline bool strongly_connected(const Matrix& p) {
    const auto fwd = reach(p, true);
    const auto bwd = reach(p, false);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        if (!fwd[i] || !bwd[i]) return false;
    }
    return true;
}

// Period of a strongly connected digraph: gcd of (d[u] + 1 - d[v]) over all
// edges, with d the BFS levels from state 0. Aperiodic iff the gcd is 1.
inline bool aperiodic_gcd(const Matrix& p) {
    const std::size_t n = p.rows();
    std::vector<std::int64_t> depth(n, -1);
    std::vector<std::size_t> queue{0};
    depth[0] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t u = queue[head];
        for (std::size_t v = 0; v < n; ++v) {
            if (p(u, v) > 0.0 && depth[v] < 0) {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    std::int64_t g = 0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (p(u, v) > 0.0) g = std::gcd(g, depth[u] + 1 - depth[v]);
    return std::abs(g) == 1;
}

}  // namespace detail

inline void ChainSpec::validate(ChainChecks checks) const {
    if (num_states == 0) throw ValidationError("chain: num_states must be positive");
    if (transition.rows() != num_states || transition.cols() != num_states)
        throw ValidationError("chain: transition matrix must be num_states x num_states");
    if (rewards.size() != num_states)
        throw ValidationError("chain: rewards length must equal num_states");
    for (std::size_t i = 0; i < num_states; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < num_states; ++j) {
            const double p = transition(i, j);
            if (!(p >= 0.0 && p <= 1.0))
                throw ValidationError("chain: transition entries must lie in [0,1]");
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-12)
            throw ValidationError("chain: row-stochastic violated (row " + std::to_string(i) +
                                  " sums to " + std::to_string(row_sum) + ")");
    }
    for (const double r : rewards) {
        if (!std::isfinite(r) || r < 0.0)
            throw ValidationError("chain: rewards must be finite and non-negative");
    }
    if (checks == ChainChecks::assume_valid || num_states == 1) return;
    if (!detail::strongly_connected(transition))
        throw ValidationError("chain: transition graph not irreducible");
    bool positive_diag = false;
    for (std::size_t i = 0; i < num_states; ++i) positive_diag |= transition(i, i) > 0.0;
    if (!positive_diag && !detail::aperiodic_gcd(transition))
        throw ValidationError("chain: transition graph not aperiodic");
}

// Stationary distribution pi with pi^T P = pi^T and sum(pi) = 1, computed by
// a direct linear solve (one balance equation replaced by the normalization
// constraint). Exact at desk scale, which the bound calculators rely on.
inline std::vector<double> stationary_distribution(const ChainSpec& spec) {
    const std::size_t n = spec.num_states;
    if (n == 1) return {1.0};
    // Rows 0..n-2: (P^T - I) pi = 0; row n-1: sum(pi) = 1.
    Matrix a(n, n, 0.0);
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) = spec.transition(j, i);
        a(i, i) -= 1.0;
    }
    for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
    b[n - 1] = 1.0;
    auto pi = detail::solve_linear(std::move(a), std::move(b));
    for (const double p : pi) {
        if (!(p > 0.0))
            throw SingularSystem("stationary solve: non-positive mass (chain not irreducible?)");
    }
    return pi;
}

namespace detail {

// General eigenvalue-gap path: characteristic polynomial plus a full root
// solve. Peels off the Perron root (the one nearest 1) and takes the largest
// real part among the rest, requiring the rest to be real.
inline double eigenvalue_gap_charpoly(const Matrix& transition) {
    const auto coeffs = characteristic_polynomial(transition);
    const auto roots = polynomial_roots(coeffs);
    std::size_t perron = 0;
    double best = std::abs(roots[0] - std::complex<double>(1.0, 0.0));
    for (std::size_t i = 1; i < roots.size(); ++i) {
        const double d = std::abs(roots[i] - std::complex<double>(1.0, 0.0));
        if (d < best) {
            best = d;
            perron = i;
        }
    }
    if (best > 1e-8)
        throw NotComputable("eigenvalue gap: unit eigenvalue not found (invalid chain?)");
    double lambda2 = -2.0;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (i == perron) continue;
        if (std::abs(roots[i].imag()) > 1e-8)
            throw NotComputable("eigenvalue gap: complex spectrum; gap defined here only for real spectra");
        lambda2 = std::max(lambda2, roots[i].real());
    }
    return 1.0 - lambda2;
}

}  // namespace detail

// Eigenvalue gap 1 - lambda_2, with lambda_2 the second-largest eigenvalue of
// the transition matrix. Two-state chains use the closed form
// lambda_2 = 1 - p01 - p10 (so the gap is p01 + p10, which may exceed 1).
// Larger chains go through the characteristic polynomial; chains with a
// complex spectrum are rejected, so the general path is only guaranteed for
// reversible / real-spectrum chains. Single-state chains mix instantly and
// report a gap of 1.
inline double eigenvalue_gap(const ChainSpec& spec) {
    const std::size_t n = spec.num_states;
    if (n == 1) return 1.0;
    if (n == 2) return spec.transition(0, 1) + spec.transition(1, 0);
    return detail::eigenvalue_gap_charpoly(spec.transition);
}

// Play the chain once: observe the reward at the current state, then sample
// the transition from the current row. Deterministic given the stream.
inline double step_chain(ChainState& state, const ChainSpec& spec, RandomStream& rng) {
    const double reward = spec.rewards[state.current];
    const double u = rng.next_double();
    double cum = 0.0;
    std::size_t next = spec.num_states - 1;  // catches fp residue in the row sum
    for (std::size_t j = 0; j < spec.num_states; ++j) {
        cum += spec.transition(state.current, j);
        if (u < cum) {
            next = j;
            break;
        }
    }
    state.current = next;
    return reward;
}

// Convenience builder for the ubiquitous two-state chain
// (state 0 -> 1 with prob p01, state 1 -> 0 with prob p10).
inline ChainSpec two_state_chain(double p01, double p10, double theta0, double theta1) {
    ChainSpec spec;
    spec.num_states = 2;
    spec.transition = Matrix{{1.0 - p01, p01}, {p10, 1.0 - p10}};
    spec.rewards = {theta0, theta1};
    return spec;
}

}  // namespace mlmr

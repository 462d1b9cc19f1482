#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mlmr/errors.hpp"
#include "mlmr/grid.hpp"

namespace mlmr {

// An injective assignment of the M users to N >= M resources;
// assignment[user] is the resource index. One matching = one arm.
struct Matching {
    std::vector<std::size_t> assignment;

    std::size_t size() const { return assignment.size(); }
    std::size_t operator[](std::size_t user) const { return assignment[user]; }

    bool is_injective(std::size_t num_resources) const {
        std::vector<char> seen(num_resources, 0);
        for (const std::size_t r : assignment) {
            if (r >= num_resources || seen[r]) return false;
            seen[r] = 1;
        }
        return true;
    }

    friend bool operator==(const Matching& a, const Matching& b) {
        return a.assignment == b.assignment;
    }
    friend auto operator<=>(const Matching& a, const Matching& b) {
        return a.assignment <=> b.assignment;
    }
};

// P(N,M) = N * (N-1) * ... * (N-M+1), saturating at UINT64_MAX.
inline std::uint64_t num_matchings(std::size_t num_users, std::size_t num_resources) {
    std::uint64_t count = 1;
    for (std::size_t k = 0; k < num_users; ++k) {
        const std::uint64_t factor = num_resources - k;
        if (count > std::numeric_limits<std::uint64_t>::max() / factor)
            return std::numeric_limits<std::uint64_t>::max();
        count *= factor;
    }
    return count;
}

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// Yields every injective assignment exactly once, in lexicographic order.
// Construction throws CapExceeded when P(N,M) exceeds the cap, so callers
// never start an enumeration they cannot finish.
class MatchingEnumeration {
public:
    MatchingEnumeration(std::size_t num_users, std::size_t num_resources,
                        std::uint64_t cap = kDefaultEnumerationCap)
        : num_users_(num_users), num_resources_(num_resources) {
        if (num_users == 0 || num_users > num_resources)
            throw ValidationError("enumerate: need 1 <= M <= N");
        total_ = num_matchings(num_users, num_resources);
        if (total_ > cap)
            throw CapExceeded("enumerate: P(N,M) = " + std::to_string(total_) +
                              " exceeds cap " + std::to_string(cap));
        used_.assign(num_resources_, 0);
    }

    std::uint64_t count() const { return total_; }

    std::optional<Matching> next() {
        if (done_) return std::nullopt;
        if (current_.empty()) {
            current_.reserve(num_users_);
            for (std::size_t r = 0; current_.size() < num_users_; ++r) {
                current_.push_back(r);
                used_[r] = 1;
            }
            return Matching{current_};
        }
        // Advance the rightmost position that still has a larger unused
        // resource, then refill the suffix with the smallest unused ones.
        std::size_t pos = num_users_;
        while (pos-- > 0) {
            used_[current_[pos]] = 0;
            for (std::size_t r = current_[pos] + 1; r < num_resources_; ++r) {
                if (!used_[r]) {
                    current_[pos] = r;
                    used_[r] = 1;
                    for (std::size_t fill = pos + 1; fill < num_users_; ++fill) {
                        std::size_t smallest = 0;
                        while (used_[smallest]) ++smallest;
                        current_[fill] = smallest;
                        used_[smallest] = 1;
                    }
                    return Matching{current_};
                }
            }
            if (pos == 0) break;
        }
        done_ = true;
        return std::nullopt;
    }

private:
    std::size_t num_users_;
    std::size_t num_resources_;
    std::uint64_t total_ = 0;
    std::vector<std::size_t> current_;
    std::vector<char> used_;
    bool done_ = false;
};

inline std::vector<Matching> all_matchings(std::size_t num_users, std::size_t num_resources,
                                           std::uint64_t cap = kDefaultEnumerationCap) {
    MatchingEnumeration en(num_users, num_resources, cap);
    std::vector<Matching> out;
    out.reserve(en.count());
    while (auto m = en.next()) out.push_back(std::move(*m));
    return out;
}

struct MatchingResult {
    Matching matching;
    double total = 0.0;
};

// Exact maximum-weight bipartite matching on an M x N weight matrix, M <= N.
// Called once per policy step, so the O(n^3) augmenting-path core runs on
// reused workspace buffers. Among optimal assignments the lexicographically
// smallest assignment vector is returned, enforced by a deterministic
// refinement pass on top of the core solve.
class MatchingSolver {
public:
    MatchingResult solve(const Matrix& weights) {
        const std::size_t m = weights.rows();
        const std::size_t n = weights.cols();
        if (m == 0 || m > n) throw ValidationError("matching: need 1 <= M <= N");
        for (const double w : weights)
            if (!std::isfinite(w)) throw ValidationError("matching: weights must be finite");

        rows_.resize(m);
        cols_.resize(n);
        for (std::size_t i = 0; i < m; ++i) rows_[i] = i;
        for (std::size_t j = 0; j < n; ++j) cols_[j] = j;

        std::vector<std::size_t> current;
        const double best_total = solve_subset(weights, rows_, cols_, current);

        // Lexicographic refinement: for each user in turn, probe smaller
        // resources; accept the first one that still completes to an optimal
        // total. `current` always holds an optimal completion of the prefix.
        const double tol = 1e-10 * std::max(1.0, std::abs(best_total));
        std::vector<char> taken(n, 0);
        double prefix = 0.0;
        std::vector<std::size_t> sub_rows, sub_cols, sub_assign;
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = 0; q < current[p]; ++q) {
                if (taken[q]) continue;
                sub_rows.clear();
                for (std::size_t i = p + 1; i < m; ++i) sub_rows.push_back(i);
                sub_cols.clear();
                for (std::size_t j = 0; j < n; ++j)
                    if (!taken[j] && j != q) sub_cols.push_back(j);
                const double sub_total = solve_subset(weights, sub_rows, sub_cols, sub_assign);
                if (prefix + weights(p, q) + sub_total >= best_total - tol) {
                    current[p] = q;
                    for (std::size_t i = p + 1; i < m; ++i) current[i] = sub_assign[i - p - 1];
                    break;
                }
            }
            taken[current[p]] = 1;
            prefix += weights(p, current[p]);
        }

        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) total += weights(i, current[i]);
        return {Matching{std::move(current)}, total};
    }

private:
    // Optimal total for the users in `rows` over the resources in `cols`
    // (rows.size() <= cols.size()). Pads with constant-weight dummy rows to a
    // square minimization problem and runs the Jonker-Volgenant style
    // shortest-augmenting-path core.
    double solve_subset(const Matrix& weights, const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& cols, std::vector<std::size_t>& out) {
        const std::size_t r = rows.size();
        const std::size_t c = cols.size();
        out.assign(r, 0);
        if (r == 0) return 0.0;
        if (c == 1) {
            out[0] = cols[0];
            return weights(rows[0], cols[0]);
        }

        cost_.assign(c * c, 0.0);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) cost_[i * c + j] = -weights(rows[i], cols[j]);
        // Dummy rows keep the matrix square; any constant works since a
        // constant row cannot influence which columns the real rows take.

        const double inf = std::numeric_limits<double>::infinity();
        u_.assign(c + 1, 0.0);
        v_.assign(c + 1, 0.0);
        match_.assign(c + 1, 0);  // match_[col 1..c] = row index (1-based), 0 = free
        way_.assign(c + 1, 0);
        for (std::size_t i = 1; i <= c; ++i) {
            match_[0] = i;
            std::size_t j0 = 0;
            minv_.assign(c + 1, inf);
            used_.assign(c + 1, 0);
            do {
                used_[j0] = 1;
                const std::size_t i0 = match_[j0];
                double delta = inf;
                std::size_t j1 = 0;
                for (std::size_t j = 1; j <= c; ++j) {
                    if (used_[j]) continue;
                    const double cur = cost_[(i0 - 1) * c + (j - 1)] - u_[i0] - v_[j];
                    if (cur < minv_[j]) {
                        minv_[j] = cur;
                        way_[j] = j0;
                    }
                    if (minv_[j] < delta) {
                        delta = minv_[j];
                        j1 = j;
                    }
                }
                for (std::size_t j = 0; j <= c; ++j) {
                    if (used_[j]) {
                        u_[match_[j]] += delta;
                        v_[j] -= delta;
                    } else {
                        minv_[j] -= delta;
                    }
                }
                j0 = j1;
            } while (match_[j0] != 0);
            do {
                const std::size_t j1 = way_[j0];
                match_[j0] = match_[j1];
                j0 = j1;
            } while (j0 != 0);
        }

        double total = 0.0;
        for (std::size_t j = 1; j <= c; ++j) {
            const std::size_t row = match_[j];
            if (row >= 1 && row <= r) {
                out[row - 1] = cols[j - 1];
                total += weights(rows[row - 1], cols[j - 1]);
            }
        }
        return total;
    }

    std::vector<std::size_t> rows_, cols_, match_, way_;
    std::vector<double> cost_, u_, v_, minv_;
    std::vector<char> used_;
};

// One-shot convenience wrapper.
inline MatchingResult max_weight_matching(const Matrix& weights) {
    MatchingSolver solver;
    return solver.solve(weights);
}

}  // namespace mlmr

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "mlmr/matching.hpp"
#include "mlmr/rng.hpp"

using namespace mlmr;

namespace {

struct BruteForce {
    double best_total = -1e300;
    std::vector<std::vector<std::size_t>> optima;  // all assignments within tol of best
};

// Independent oracle: plain recursion over injective assignments.
BruteForce brute_force(const Matrix& w, double tol = 1e-9) {
    BruteForce result;
    std::vector<std::size_t> assignment(w.rows());
    std::vector<char> used(w.cols(), 0);
    auto recurse = [&](auto&& self, std::size_t row, double total) -> void {
        if (row == w.rows()) {
            if (total > result.best_total + tol) {
                result.best_total = total;
                result.optima.clear();
                result.optima.push_back(assignment);
            } else if (total >= result.best_total - tol) {
                result.best_total = std::max(result.best_total, total);
                result.optima.push_back(assignment);
            }
            return;
        }
        for (std::size_t col = 0; col < w.cols(); ++col) {
            if (used[col]) continue;
            used[col] = 1;
            assignment[row] = col;
            self(self, row + 1, total + w(row, col));
            used[col] = 0;
        }
    };
    recurse(recurse, 0, 0.0);
    return result;
}

Matrix random_matrix(RandomStream& rng, std::size_t rows, std::size_t cols, bool integers) {
    Matrix w(rows, cols, 0.0);
    for (auto& v : w) v = integers ? std::floor(rng.next_double() * 21.0) - 10.0
                                   : 20.0 * rng.next_double() - 10.0;
    return w;
}

}  // namespace

TEST_CASE("identity-dominant 2x2") {
    const auto result = max_weight_matching(Matrix{{1.0, 0.0}, {0.0, 1.0}});
    CHECK(result.matching.assignment == std::vector<std::size_t>{0, 1});
    CHECK(result.total == 2.0);
}

TEST_CASE("mean-reward matrix of the first worked example") {
    const Matrix mu{{0.76 / 1.1, 0.43 / 1.1, 0.65 / 1.5, 0.51 / 1.2},
                    {0.37 / 1.1, 0.62 / 1.4, 0.86 / 1.3, 0.54 / 1.1}};
    const auto result = max_weight_matching(mu);
    CHECK(result.matching.assignment == std::vector<std::size_t>{0, 2});
    CHECK(result.total == doctest::Approx(0.76 / 1.1 + 0.86 / 1.3).epsilon(1e-12));
    CHECK(result.total == doctest::Approx(1.3524).epsilon(1e-4));
}

TEST_CASE("random instances match brute force") {
    RandomStream rng(1001);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t m = 1 + trial % 4;
        const std::size_t n = m + trial % 3;
        const bool integers = trial % 2 == 0;
        const auto w = random_matrix(rng, m, n, integers);
        const auto oracle = brute_force(w);
        const auto result = max_weight_matching(w);
        if (integers) {
            CHECK(result.total == oracle.best_total);
        } else {
            CHECK(result.total == doctest::Approx(oracle.best_total).epsilon(1e-9));
        }
        CHECK(result.matching.is_injective(n));
    }
}

TEST_CASE("4x6 instances match brute force over all 360 assignments") {
    RandomStream rng(2002);
    for (int trial = 0; trial < 20; ++trial) {
        const auto w = random_matrix(rng, 4, 6, false);
        const auto oracle = brute_force(w);
        const auto result = max_weight_matching(w);
        CHECK(std::abs(result.total - oracle.best_total) < 1e-9);
    }
}

TEST_CASE("tie-break returns the lexicographically smallest optimum") {
    // All-equal weights: every assignment optimal.
    const auto flat = max_weight_matching(Matrix(3, 5, 1.0));
    CHECK(flat.matching.assignment == std::vector<std::size_t>{0, 1, 2});

    // Two optima; (0,1) is smaller than (1,0).
    const auto pair = max_weight_matching(Matrix{{2.0, 1.0}, {1.0, 0.0}});
    CHECK(pair.matching.assignment == std::vector<std::size_t>{0, 1});

    // Coarse integer weights force plenty of ties; compare with the oracle's
    // lexicographic minimum.
    RandomStream rng(3003);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t m = 2 + trial % 2;
        const std::size_t n = m + trial % 3;
        Matrix w(m, n, 0.0);
        for (auto& v : w) v = std::floor(rng.next_double() * 3.0);
        const auto oracle = brute_force(w);
        const auto smallest = *std::min_element(oracle.optima.begin(), oracle.optima.end());
        const auto result = max_weight_matching(w);
        CHECK(result.matching.assignment == smallest);
    }
}

TEST_CASE("uniform weight shift moves the total by M*c and keeps the argmax") {
    RandomStream rng(4004);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 1 + trial % 3;
        const std::size_t n = m + trial % 4;
        const auto w = random_matrix(rng, m, n, false);
        const double c = 10.0 * rng.next_double() - 5.0;
        Matrix shifted = w;
        for (auto& v : shifted) v += c;
        const auto base = max_weight_matching(w);
        const auto moved = max_weight_matching(shifted);
        CHECK(moved.matching.assignment == base.matching.assignment);
        CHECK(moved.total ==
              doctest::Approx(base.total + static_cast<double>(m) * c).epsilon(1e-9));
    }
}

TEST_CASE("weight validation") {
    Matrix w(2, 2, 0.0);
    w(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(max_weight_matching(w), ValidationError);
    CHECK_THROWS_AS(max_weight_matching(Matrix(3, 2, 1.0)), ValidationError);  // M > N
}

TEST_CASE("num_matchings computes falling factorials") {
    CHECK(num_matchings(1, 3) == 3);
    CHECK(num_matchings(2, 4) == 12);
    CHECK(num_matchings(3, 5) == 60);
    CHECK(num_matchings(4, 4) == 24);
    CHECK(num_matchings(10, 30) > 1'000'000ULL);
}

TEST_CASE("enumeration yields every matching once, in lexicographic order") {
    MatchingEnumeration small(1, 3);
    CHECK(small.count() == 3);
    std::vector<Matching> seen;
    while (auto m = small.next()) seen.push_back(*m);
    CHECK(seen.size() == 3);

    const auto twelve = all_matchings(2, 4);
    CHECK(twelve.size() == 12);
    CHECK(twelve.front().assignment == std::vector<std::size_t>{0, 1});
    CHECK(twelve.back().assignment == std::vector<std::size_t>{3, 2});

    const auto sixty = all_matchings(3, 5);
    CHECK(sixty.size() == 60);
    std::set<std::vector<std::size_t>> unique;
    for (std::size_t k = 0; k < sixty.size(); ++k) {
        CHECK(sixty[k].is_injective(5));
        unique.insert(sixty[k].assignment);
        if (k > 0) CHECK(sixty[k - 1].assignment < sixty[k].assignment);
    }
    CHECK(unique.size() == 60);
}

TEST_CASE("enumeration cap") {
    CHECK_THROWS_AS(MatchingEnumeration(3, 5, 59), CapExceeded);
    CHECK_NOTHROW(MatchingEnumeration(3, 5, 60));
    CHECK_THROWS_AS(MatchingEnumeration(8, 20), CapExceeded);  // P(20,8) ~ 5e9
}

TEST_CASE("solver is deterministic and reusable") {
    MatchingSolver solver;
    RandomStream rng(5005);
    const auto w = random_matrix(rng, 3, 5, false);
    const auto first = solver.solve(w);
    for (int repeat = 0; repeat < 5; ++repeat) {
        const auto again = solver.solve(w);
        CHECK(again.matching.assignment == first.matching.assignment);
        CHECK(again.total == first.total);
    }
}

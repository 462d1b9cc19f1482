#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "mlmr/errors.hpp"
#include "mlmr/grid.hpp"

namespace mlmr::detail {

// Gaussian elimination with partial pivoting. A is n x n row-major, b has
// length n; both are consumed. Throws SingularSystem when a pivot collapses.
inline std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        }
        if (std::abs(a(pivot, col)) < 1e-12) {
            throw SingularSystem("stationary solve: singular system (chain not irreducible?)");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a(ri, c) * x[c];
        x[ri] = acc / a(ri, ri);
    }
    return x;
}

// Coefficients of det(lambda*I - P) by the Faddeev-LeVerrier recurrence,
// ascending order: c[0] + c[1]*lambda + ... + c[n]*lambda^n with c[n] = 1.
inline std::vector<double> characteristic_polynomial(const Matrix& p) {
    const std::size_t n = p.rows();
    std::vector<double> c(n + 1, 0.0);
    c[n] = 1.0;
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        // m <- P * m
        Matrix pm(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t l = 0; l < n; ++l) {
                const double pil = p(i, l);
                if (pil == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) pm(i, j) += pil * m(l, j);
            }
        m = pm;
        double trace = 0.0;
        for (std::size_t i = 0; i < n; ++i) trace += m(i, i);
        c[n - k] = -trace / static_cast<double>(k);
        for (std::size_t i = 0; i < n; ++i) m(i, i) += c[n - k];
    }
    return c;
}

// All roots of a monic real polynomial via Durand-Kerner iteration.
// Coefficients ascending, coeffs.back() == 1. Throws NotComputable when the
// iteration budget runs out.
inline std::vector<std::complex<double>> polynomial_roots(const std::vector<double>& coeffs,
                                                          int max_iter = 2000) {
    using cplx = std::complex<double>;
    const std::size_t degree = coeffs.size() - 1;
    std::vector<cplx> roots(degree);
    const cplx seed(0.4, 0.9);
    cplx powv(1.0, 0.0);
    for (std::size_t i = 0; i < degree; ++i) {
        powv *= seed;
        roots[i] = powv;
    }
    auto eval = [&](cplx z) {
        cplx acc(coeffs[degree], 0.0);
        for (std::size_t i = degree; i-- > 0;) acc = acc * z + coeffs[i];
        return acc;
    };
    for (int iter = 0; iter < max_iter; ++iter) {
        double max_step = 0.0;
        for (std::size_t i = 0; i < degree; ++i) {
            cplx denom(1.0, 0.0);
            for (std::size_t j = 0; j < degree; ++j) {
                if (j != i) denom *= roots[i] - roots[j];
            }
            const cplx delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            max_step = std::max(max_step, std::abs(delta));
        }
        if (max_step < 1e-13) return roots;
    }
    throw NotComputable("eigenvalue solve: root iteration did not converge");
}

}  // namespace mlmr::detail

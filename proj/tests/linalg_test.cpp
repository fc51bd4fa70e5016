#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "odestab/error.hpp"
#include "odestab/linalg.hpp"

using namespace odestab;
using cplx = std::complex<double>;

namespace {

double rand_in(std::mt19937_64& rng, double lo, double hi) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rand_in(rng, -1.0, 1.0);
    return m;
}

double trace(const Matrix& a) {
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

// Characteristic polynomial coefficients by the Faddeev-LeVerrier recurrence:
// p(z) = z^n + c[1] z^(n-1) + ... + c[n]. Entirely independent of the QR path.
std::vector<double> char_poly_coeffs(const Matrix& a) {
    const std::size_t n = a.rows();
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    Matrix m(n, n);  // M_0 = 0 so the k=1 step produces A itself
    for (std::size_t k = 1; k <= n; ++k) {
        // m <- A * (m + c[k-1] I)
        Matrix t = m;
        for (std::size_t i = 0; i < n; ++i) t(i, i) += c[k - 1];
        Matrix next(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t l = 0; l < n; ++l) s += a(i, l) * t(l, j);
                next(i, j) = s;
            }
        m = next;
        c[k] = -trace(m) / static_cast<double>(k);
    }
    return c;
}

cplx poly_eval(const std::vector<double>& c, cplx z) {
    cplx acc = c[0];
    for (std::size_t k = 1; k < c.size(); ++k) acc = acc * z + c[k];
    return acc;
}

// Durand-Kerner simultaneous iteration for all roots of a monic polynomial.
std::vector<cplx> poly_roots(const std::vector<double>& c) {
    const std::size_t n = c.size() - 1;
    std::vector<cplx> z(n);
    cplx seed(0.4, 0.9);
    cplx acc = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc *= seed;
        z[k] = acc;
    }
    for (int iter = 0; iter < 500; ++iter) {
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            cplx denom = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != k) denom *= z[k] - z[j];
            cplx step = poly_eval(c, z[k]) / denom;
            z[k] -= step;
            worst = std::max(worst, std::abs(step) / (1.0 + std::abs(z[k])));
        }
        if (worst < 1e-13) break;
    }
    return z;
}

}  // namespace

TEST_CASE("closed-form 2x2 spectra match the quadratic formula") {
    // damped rotation: eigenvalues -0.05 +/- i sqrt(3.99)/2
    Matrix a(2, 2, {0.0, 1.0, -1.0, -0.1});
    EigenSet e = eigenvalues(a);
    double im = std::sqrt(3.99) / 2.0;
    CHECK(e.values[0].real() == doctest::Approx(-0.05).epsilon(1e-12));
    CHECK(e.values[0].imag() == doctest::Approx(-im).epsilon(1e-12));
    CHECK(e.values[1] == std::conj(e.values[0]));  // exact reflection

    Matrix b(2, 2, {0.0, -1.0, 1.0, -0.333});
    EigenSet eb = eigenvalues(b);
    CHECK(eb.values[1].real() == doctest::Approx(-0.1665).epsilon(1e-12));
    CHECK(eb.values[1].imag() == doctest::Approx(std::sqrt(4.0 - 0.333 * 0.333) / 2.0));

    // repeated real root: [[0,1],[-1,2]] has 1,1
    Matrix c(2, 2, {0.0, 1.0, -1.0, 2.0});
    EigenSet ec = eigenvalues(c);
    CHECK(ec.values[0].real() == doctest::Approx(1.0));
    CHECK(ec.values[1].real() == doctest::Approx(1.0));
    CHECK(ec.values[0].imag() == 0.0);
}

TEST_CASE("QR spectra agree with a polynomial-root oracle") {
    std::mt19937_64 rng(20240817);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 3 + trial % 4;  // orders 3..6
        Matrix a = random_matrix(rng, n);
        EigenSet got = eigenvalues(a);
        std::vector<cplx> want = poly_roots(char_poly_coeffs(a));
        REQUIRE(got.values.size() == n);
        double scale = 0.0;
        for (const auto& z : want) scale = std::max(scale, std::abs(z));
        // nearest-neighbor matching; positional comparison would be fooled
        // when jitter in the oracle reorders near-ties in the sort key.
        // 1e-6 reflects the oracle's conditioning near clustered roots, not
        // the solver's accuracy (the residual check below is much tighter).
        std::vector<bool> used(n, false);
        for (const auto& z : got.values) {
            double best = 1e300;
            std::size_t best_k = 0;
            for (std::size_t k = 0; k < n; ++k) {
                if (used[k]) continue;
                double d = std::abs(z - want[k]);
                if (d < best) {
                    best = d;
                    best_k = k;
                }
            }
            used[best_k] = true;
            CHECK(best <= 1e-6 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("spectra satisfy trace, determinant and conjugacy identities") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + trial % 5;  // orders 2..6
        Matrix a = random_matrix(rng, n);
        EigenSet e = eigenvalues(a);

        cplx sum = 0.0, prod = 1.0;
        for (const auto& z : e.values) {
            sum += z;
            prod *= z;
        }
        double tr = trace(a);
        double dt = det(a);
        CHECK(std::abs(sum.real() - tr) <= 1e-8 * std::max(1.0, std::abs(tr)));
        CHECK(std::abs(sum.imag()) <= 1e-8);
        CHECK(std::abs(prod - cplx(dt)) <= 1e-8 * std::max(1.0, std::abs(dt)));

        // every strictly complex value has its exact conjugate present
        for (const auto& z : e.values) {
            if (z.imag() == 0.0) continue;
            CHECK(std::count(e.values.begin(), e.values.end(), std::conj(z)) >= 1);
        }

        CHECK(e.residual <= 1e-8);
    }
}

TEST_CASE("defective and triangular matrices still resolve") {
    // Jordan-like block, eigenvalue 2 three times
    Matrix j(3, 3, {2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 2.0});
    EigenSet e = eigenvalues(j);
    for (const auto& z : e.values) {
        CHECK(z.real() == doctest::Approx(2.0).epsilon(1e-5));  // defective: O(eps^(1/3)) spread
        CHECK(std::abs(z.imag()) < 1e-4);
    }

    Matrix zero(4, 4);
    for (const auto& z : eigenvalues(zero).values) CHECK(z == cplx(0.0));

    Matrix one(1, 1, {-7.5});
    CHECK(eigenvalues(one).values[0] == cplx(-7.5));
}

TEST_CASE("eigenvalue input validation") {
    CHECK_THROWS_AS(eigenvalues(Matrix(2, 3)), LinalgError);
    Matrix bad(2, 2, {1.0, 0.0, 0.0, std::nan("")});
    CHECK_THROWS_AS(eigenvalues(bad), LinalgError);
}

TEST_CASE("symmetric eigensolver on hand-checkable matrices") {
    Matrix d(2, 2, {-2.0, 0.0, 0.0, 0.0});
    CHECK(sym_eigmax(d) == doctest::Approx(0.0));
    SymEigen ed = sym_eigen(d);
    CHECK(ed.values[0] == doctest::Approx(-2.0));
    CHECK(ed.values[1] == doctest::Approx(0.0));

    // [[2,1],[1,2]] has 1 and 3 with eigenvectors (1,-1)/sqrt2, (1,1)/sqrt2
    Matrix m(2, 2, {2.0, 1.0, 1.0, 2.0});
    SymEigMax top = sym_eigmax_pair(m);
    CHECK(top.value == doctest::Approx(3.0));
    CHECK(std::abs(top.vector[0]) == doctest::Approx(std::sqrt(0.5)));
    CHECK(std::abs(top.vector[1]) == doctest::Approx(std::sqrt(0.5)));
    CHECK(top.vector[0] * top.vector[1] > 0.0);  // same sign
}

TEST_CASE("symmetric spectra obey residual, orthogonality and Rayleigh bounds") {
    std::mt19937_64 rng(5150);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + trial % 5;
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rand_in(rng, -2.0, 2.0);

        SymEigen e = sym_eigen(a);
        double scale = std::max(1.0, max_abs(a));

        for (std::size_t k = 0; k < n; ++k) {
            // A v = lambda v
            std::vector<double> v(n);
            for (std::size_t r = 0; r < n; ++r) v[r] = e.vectors(r, k);
            std::vector<double> av = a.apply(v);
            for (std::size_t r = 0; r < n; ++r)
                CHECK(std::abs(av[r] - e.values[k] * v[r]) <= 1e-10 * scale);
            if (k > 0) CHECK(e.values[k] >= e.values[k - 1]);
        }

        // no Rayleigh quotient exceeds the reported maximum
        double lmax = sym_eigmax(a);
        for (int probe = 0; probe < 20; ++probe) {
            std::vector<double> x(n);
            for (auto& xi : x) xi = rand_in(rng, -1.0, 1.0);
            double xx = 0.0, xax = 0.0;
            std::vector<double> ax = a.apply(x);
            for (std::size_t r = 0; r < n; ++r) {
                xx += x[r] * x[r];
                xax += x[r] * ax[r];
            }
            if (xx == 0.0) continue;
            CHECK(xax / xx <= lmax + 1e-10 * scale);
        }
    }
}

TEST_CASE("asymmetric input to the symmetric solver is rejected") {
    Matrix a(2, 2, {1.0, 0.5, -0.5, 1.0});
    CHECK_THROWS_AS(sym_eigen(a), LinalgError);
    // tiny asymmetry from roundoff is tolerated and symmetrized away
    Matrix b(2, 2, {1.0, 0.5 + 1e-13, 0.5, 1.0});
    CHECK(sym_eigmax(b) == doctest::Approx(1.5));
}

TEST_CASE("linear solves reproduce known solutions") {
    Matrix a(3, 3, {2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0});
    std::vector<double> want = {1.0, -2.0, 3.0};
    std::vector<double> b = a.apply(want);
    std::vector<double> got = solve_linear(a, b);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + trial % 6;
        Matrix m = random_matrix(rng, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) += 3.0;  // keep it well-conditioned
        std::vector<double> x(n);
        for (auto& xi : x) xi = rand_in(rng, -2.0, 2.0);
        std::vector<double> rhs = m.apply(x);
        std::vector<double> back = solve_linear(m, rhs);
        for (std::size_t i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-9));
    }
}

TEST_CASE("singular and malformed solves are rejected") {
    Matrix s(2, 2, {1.0, 1.0, 1.0, 1.0});
    std::vector<double> b = {1.0, 2.0};
    CHECK_THROWS_AS(solve_linear(s, b), SingularMatrixError);
    CHECK_THROWS_AS(solve_linear(Matrix(2, 3), b), LinalgError);
    std::vector<double> wrong = {1.0};
    CHECK_THROWS_AS(solve_linear(Matrix::identity(2), wrong), LinalgError);
    CHECK(det(s) == 0.0);
}

TEST_CASE("determinants match cofactor expansion on small matrices") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix a = random_matrix(rng, 3);
        double cofactor = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                          a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                          a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        CHECK(det(a) == doctest::Approx(cofactor).epsilon(1e-10));
    }
    CHECK(det(Matrix::identity(5)) == doctest::Approx(1.0));
}

TEST_CASE("characteristic polynomial evaluator vanishes only at eigenvalues") {
    Matrix a(2, 2, {0.0, 1.0, -1.0, 0.0});  // eigenvalues +/- i
    CHECK(char_poly_abs(a, cplx(0.0, 1.0)) <= 1e-14);
    CHECK(char_poly_abs(a, cplx(0.0, -1.0)) <= 1e-14);
    CHECK(char_poly_abs(a, cplx(1.0, 0.0)) == doctest::Approx(2.0));  // |1 + 1|
}

TEST_CASE("vector helpers") {
    std::vector<double> u = {3.0, 4.0};
    std::vector<double> v = {0.0, 0.0};
    CHECK(vec_norm(u) == doctest::Approx(5.0));
    CHECK(vec_dist(u, v) == doctest::Approx(5.0));
    CHECK(vec_norm(std::vector<double>{}) == 0.0);
}

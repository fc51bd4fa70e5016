#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace odestab {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    // y = A x, each row accumulated left to right
    std::vector<double> apply(std::span<const double> x) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

double vec_norm(std::span<const double> v);
double vec_dist(std::span<const double> a, std::span<const double> b);

struct EigenSet {
    // sorted by (real, imag); conjugate pairs are exact reflections
    std::vector<std::complex<double>> values;
    // max over values of |det(lambda I - A)| / max(1, ||A||_F^n)
    double residual = 0.0;
};

// Eigenvalues of a general square matrix: closed forms for n <= 2,
// Hessenberg reduction plus shifted QR above that.
// Throws ConvergenceError if the QR iteration stalls.
EigenSet eigenvalues(const Matrix& a);

struct SymEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column k pairs with values[k]
};

// Jacobi eigendecomposition. The input must be symmetric to 1e-9 (scaled by
// max(1, max entry)); it is symmetrized exactly before iterating.
SymEigen sym_eigen(const Matrix& a);

// Largest eigenvalue of a symmetric matrix.
double sym_eigmax(const Matrix& a);

struct SymEigMax {
    double value;
    std::vector<double> vector;  // unit eigenvector for the largest eigenvalue
};

SymEigMax sym_eigmax_pair(const Matrix& a);

// Solve A x = b by LU with partial pivoting.
// Throws SingularMatrixError when the best pivot drops below 1e-14 * max entry.
std::vector<double> solve_linear(const Matrix& a, std::span<const double> b);

double det(const Matrix& a);

// |det(z I - A)| evaluated directly by complex elimination; used for the
// eigenvalue residual diagnostic.
double char_poly_abs(const Matrix& a, std::complex<double> z);

}  // namespace odestab

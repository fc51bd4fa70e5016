#include "odestab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odestab/error.hpp"

namespace odestab {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw LinalgError("matrix data size mismatch");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::vector<double> Matrix::apply(std::span<const double> x) const {
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += data_[i * cols_ + j] * x[j];
        y[i] = s;
    }
    return y;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double vec_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double vec_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

void require_square_finite(const Matrix& a, const char* who) {
    if (!a.square()) throw LinalgError(std::string(who) + ": matrix is not square");
    for (double v : a.data())
        if (!std::isfinite(v)) throw LinalgError(std::string(who) + ": non-finite entry");
}

// Householder reduction to upper Hessenberg form, in place.
void to_hessenberg(Matrix& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    std::vector<double> v(n, 0.0);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double scale = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) scale += std::abs(a(i, k));
        if (scale == 0.0) continue;
        double sigma = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k) / scale;
            sigma += v[i] * v[i];
        }
        double g = std::sqrt(sigma);
        if (v[k + 1] > 0.0) g = -g;
        double h = sigma - v[k + 1] * g;  // = v.v / 2 after the update below
        v[k + 1] -= g;
        // rows: A <- P A, columns j >= k (earlier columns are zero below row k)
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s /= h;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        // columns: A <- A P
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s /= h;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        a(k + 1, k) = g * scale;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

constexpr double kMachEps = std::numeric_limits<double>::epsilon();
constexpr double kRelaxedSubdiagTol = 1e-10;  // fallback gate for stubborn blocks
constexpr long kMaxSweeps = 10000;

// Shifted double-step QR iteration on an upper Hessenberg matrix.
// Destroys h; returns unordered eigenvalues.
std::vector<std::complex<double>> hqr(Matrix& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n));

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    int nn = n - 1;
    double t = 0.0;
    int its = 0;
    long sweeps = 0;
    while (nn >= 0) {
        double tol = its > 40 ? kRelaxedSubdiagTol : kMachEps;
        int l;
        for (l = nn; l >= 1; --l) {
            double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
            if (s == 0.0) s = anorm;
            if (std::abs(a(l, l - 1)) <= tol * s) {
                a(l, l - 1) = 0.0;
                break;
            }
        }
        double x = a(nn, nn);
        if (l == nn) {  // single root deflates
            out[static_cast<std::size_t>(nn)] = {x + t, 0.0};
            --nn;
            its = 0;
            continue;
        }
        double y = a(nn - 1, nn - 1);
        double w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {  // 2x2 block deflates
            double p = 0.5 * (y - x);
            double q = p * p + w;
            double z = std::sqrt(std::abs(q));
            x += t;
            if (q >= 0.0) {
                z = p + (p >= 0.0 ? z : -z);
                double r1 = x + z;
                double r2 = (z != 0.0) ? x - w / z : r1;
                out[static_cast<std::size_t>(nn - 1)] = {r1, 0.0};
                out[static_cast<std::size_t>(nn)] = {r2, 0.0};
            } else {
                out[static_cast<std::size_t>(nn - 1)] = {x + p, -z};
                out[static_cast<std::size_t>(nn)] = {x + p, z};
            }
            nn -= 2;
            its = 0;
            continue;
        }

        if (++sweeps > kMaxSweeps)
            throw ConvergenceError("eigenvalues: no convergence after 10000 QR sweeps");
        if (its > 0 && its % 10 == 0) {  // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
        }
        ++its;

        // look for two consecutive small subdiagonals to start the chase at
        int m;
        double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
        for (m = nn - 2; m >= l; --m) {
            z = a(m, m);
            double dr = x - z;
            double ds = y - z;
            p = (dr * ds - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - dr - ds;
            r = a(m + 2, m + 1);
            double sc = std::abs(p) + std::abs(q) + std::abs(r);
            if (sc != 0.0) {
                p /= sc;
                q /= sc;
                r /= sc;
            }
            if (m == l) break;
            double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            double vv = std::abs(p) *
                        (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= kMachEps * vv) break;
        }
        for (int i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != m + 2) a(i, i - 3) = 0.0;
        }

        // double QR step on rows l..nn
        for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
                p = a(k, k - 1);
                q = a(k + 1, k - 1);
                r = (k != nn - 1) ? a(k + 2, k - 1) : 0.0;
                x = std::abs(p) + std::abs(q) + std::abs(r);
                if (x != 0.0) {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            double s = std::sqrt(p * p + q * q + r * r);
            if (p < 0.0) s = -s;
            if (s == 0.0) continue;
            if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
            } else {
                a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
                double pp = a(k, j) + q * a(k + 1, j);
                if (k != nn - 1) {
                    pp += r * a(k + 2, j);
                    a(k + 2, j) -= pp * z;
                }
                a(k + 1, j) -= pp * y;
                a(k, j) -= pp * x;
            }
            int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
                double pp = x * a(i, k) + y * a(i, k + 1);
                if (k != nn - 1) {
                    pp += z * a(i, k + 2);
                    a(i, k + 2) -= pp * r;
                }
                a(i, k + 1) -= pp * q;
                a(i, k) -= pp;
            }
        }
    }
    return out;
}

}  // namespace

double char_poly_abs(const Matrix& a, std::complex<double> z) {
    const std::size_t n = a.rows();
    std::vector<std::complex<double>> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m[i * n + j] = (i == j ? z : std::complex<double>(0.0)) - a(i, j);
    std::complex<double> d = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m[i * n + k]) > std::abs(m[piv * n + k])) piv = i;
        if (std::abs(m[piv * n + k]) == 0.0) return 0.0;
        if (piv != k) {
            for (std::size_t j = k; j < n; ++j) std::swap(m[piv * n + j], m[k * n + j]);
            d = -d;
        }
        d *= m[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            std::complex<double> f = m[i * n + k] / m[k * n + k];
            for (std::size_t j = k; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
        }
    }
    return std::abs(d);
}

EigenSet eigenvalues(const Matrix& a) {
    require_square_finite(a, "eigenvalues");
    const std::size_t n = a.rows();
    EigenSet out;
    if (n == 1) {
        out.values = {{a(0, 0), 0.0}};
    } else if (n == 2) {
        double mean = 0.5 * (a(0, 0) + a(1, 1));
        double dt = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        double delta = 0.25 * (a(0, 0) - a(1, 1)) * (a(0, 0) - a(1, 1)) + a(0, 1) * a(1, 0);
        if (delta >= 0.0) {
            double s = std::sqrt(delta);
            double l1 = mean >= 0.0 ? mean + s : mean - s;
            double l2 = (l1 != 0.0) ? dt / l1 : 2.0 * mean - l1;
            out.values = {{l1, 0.0}, {l2, 0.0}};
        } else {
            double s = std::sqrt(-delta);
            out.values = {{mean, -s}, {mean, s}};
        }
    } else {
        Matrix h = a;
        to_hessenberg(h);
        out.values = hqr(h);
    }

    std::sort(out.values.begin(), out.values.end(),
              [](const std::complex<double>& x, const std::complex<double>& y) {
                  if (x.real() != y.real()) return x.real() < y.real();
                  return x.imag() < y.imag();
              });

    double denom = std::max(1.0, std::pow(frobenius_norm(a), static_cast<double>(n)));
    for (const auto& z : out.values)
        out.residual = std::max(out.residual, char_poly_abs(a, z) / denom);
    return out;
}

SymEigen sym_eigen(const Matrix& a0) {
    require_square_finite(a0, "sym_eigen");
    const std::size_t n = a0.rows();
    double gate = 1e-9 * std::max(1.0, max_abs(a0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a0(i, j) - a0(j, i)) > gate)
                throw LinalgError("sym_eigen: matrix is not symmetric to 1e-9");

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (a0(i, j) + a0(j, i));
    Matrix v = Matrix::identity(n);

    double fnorm = std::max(1.0, frobenius_norm(a));
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= 1e-14 * fnorm) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t2 = theta * theta + 1.0;
                double tan_phi;
                if (std::isfinite(t2))
                    tan_phi = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(t2));
                else
                    tan_phi = 0.5 / theta;
                double c = 1.0 / std::sqrt(tan_phi * tan_phi + 1.0);
                double s = tan_phi * c;
                double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - tan_phi * apq;
                a(q, q) = aqq + tan_phi * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    double arp = a(r, p), arq = a(r, q);
                    a(r, p) = a(p, r) = c * arp - s * arq;
                    a(r, q) = a(q, r) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    SymEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

double sym_eigmax(const Matrix& a) { return sym_eigen(a).values.back(); }

SymEigMax sym_eigmax_pair(const Matrix& a) {
    SymEigen e = sym_eigen(a);
    const std::size_t n = a.rows();
    SymEigMax out;
    out.value = e.values.back();
    out.vector.resize(n);
    for (std::size_t r = 0; r < n; ++r) out.vector[r] = e.vectors(r, n - 1);
    return out;
}

namespace {

// In-place LU with partial pivoting. Returns the permutation sign, or 0 when
// a pivot falls below 1e-14 * max entry (strict=false keeps going for det).
int lu_decompose(Matrix& a, std::vector<std::size_t>& perm, bool strict) {
    const std::size_t n = a.rows();
    double pivot_floor = 1e-14 * max_abs(a);
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    int sign = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= pivot_floor) {
            if (strict)
                throw SingularMatrixError("solve_linear: matrix is singular to working precision");
            return 0;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(k, j));
            std::swap(perm[piv], perm[k]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            a(i, k) /= a(k, k);
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= a(i, k) * a(k, j);
        }
    }
    return sign;
}

}  // namespace

std::vector<double> solve_linear(const Matrix& a, std::span<const double> b) {
    require_square_finite(a, "solve_linear");
    const std::size_t n = a.rows();
    if (b.size() != n) throw LinalgError("solve_linear: right-hand side length mismatch");
    Matrix lu = a;
    std::vector<std::size_t> perm;
    lu_decompose(lu, perm, true);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
        x[i] /= lu(i, i);
    }
    return x;
}

double det(const Matrix& a) {
    require_square_finite(a, "det");
    Matrix lu = a;
    std::vector<std::size_t> perm;
    int sign = lu_decompose(lu, perm, false);
    if (sign == 0) return 0.0;
    double d = sign;
    for (std::size_t i = 0; i < lu.rows(); ++i) d *= lu(i, i);
    return d;
}

}  // namespace odestab

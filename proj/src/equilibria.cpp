#include "odestab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "odestab/error.hpp"

namespace odestab {

namespace {

constexpr double kResidualGate = 1e-10;  // acceptance for found roots
constexpr double kDedupDistance = 1e-6;
constexpr double kBoxInflation = 1e-6;
constexpr double kMarginalBand = 1e-9;  // |Re| below this counts as marginal
constexpr int kMaxNewtonSteps = 100;
constexpr int kMaxHalvings = 8;

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// One damped Newton run; returns the root or nothing (singular Jacobian,
// domain error, stall, or no convergence within the step budget).
std::optional<std::vector<double>> newton_from(const SystemDef& sys, const SymMatrix& jac,
                                               std::vector<double> x) {
    try {
        std::vector<double> f = sys.eval_rhs(x);
        double res = vec_norm(f);
        for (int step = 0; step < kMaxNewtonSteps && res > 1e-13; ++step) {
            Matrix j = eval_sym_matrix(jac, x, sys.param_values());
            std::vector<double> neg_f(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) neg_f[i] = -f[i];
            std::vector<double> dx;
            try {
                dx = solve_linear(j, neg_f);
            } catch (const SingularMatrixError&) {
                return std::nullopt;
            }

            double lambda = 1.0;
            bool accepted = false;
            for (int halving = 0; halving <= kMaxHalvings; ++halving) {
                std::vector<double> trial(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + lambda * dx[i];
                try {
                    std::vector<double> ft = sys.eval_rhs(trial);
                    double rt = vec_norm(ft);
                    if (rt < res) {
                        x = std::move(trial);
                        f = std::move(ft);
                        res = rt;
                        accepted = true;
                        break;
                    }
                } catch (const EvalError&) {
                    // treat a domain violation like a residual increase
                }
                lambda *= 0.5;
            }
            if (!accepted) break;  // stalled
        }
        if (res < kResidualGate) return x;
        return std::nullopt;
    } catch (const EvalError&) {
        return std::nullopt;  // start point outside the field's domain
    }
}

}  // namespace

void validate_box(const SearchBox& box, std::size_t dim) {
    if (box.lower.size() != dim || box.upper.size() != dim)
        throw Error("search box dimension does not match the system");
    for (std::size_t i = 0; i < dim; ++i)
        if (!(box.lower[i] < box.upper[i]))
            throw Error("search box must satisfy lower < upper on every axis");
    if (box.grid_per_axis < 2) throw Error("search box needs at least 2 grid nodes per axis");
}

std::string_view to_string(LocalClass c) {
    switch (c) {
        case LocalClass::StableNode: return "stable-node";
        case LocalClass::StableFocus: return "stable-focus";
        case LocalClass::UnstableNode: return "unstable-node";
        case LocalClass::UnstableFocus: return "unstable-focus";
        case LocalClass::Saddle: return "saddle";
        case LocalClass::CenterMarginal: return "center-marginal";
        case LocalClass::Degenerate: return "degenerate";
    }
    return "?";
}

double Equilibrium::spectral_abscissa() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : eigen.values) m = std::max(m, z.real());
    return m;
}

Matrix eval_sym_matrix(const SymMatrix& m, std::span<const double> state,
                       std::span<const double> params) {
    return Matrix(m.rows(), m.cols(), m.eval_at(state, params));
}

std::vector<Equilibrium> find_equilibria(const SystemDef& sys, const SearchBox& box) {
    const std::size_t n = sys.dim();
    validate_box(box, n);
    SymMatrix jac = jacobian_sym(sys);

    // grid starts, axis 0 slowest
    std::vector<std::vector<double>> roots;
    std::vector<std::size_t> idx(n, 0);
    const std::size_t g = box.grid_per_axis;
    for (;;) {
        std::vector<double> start(n);
        for (std::size_t i = 0; i < n; ++i)
            start[i] = box.lower[i] + static_cast<double>(idx[i]) * (box.upper[i] - box.lower[i]) /
                                          static_cast<double>(g - 1);
        if (auto root = newton_from(sys, jac, std::move(start))) {
            bool inside = true;
            for (std::size_t i = 0; i < n; ++i)
                if ((*root)[i] < box.lower[i] - kBoxInflation ||
                    (*root)[i] > box.upper[i] + kBoxInflation)
                    inside = false;
            if (inside) roots.push_back(std::move(*root));
        }

        std::size_t axis = n;
        while (axis-- > 0) {
            if (++idx[axis] < g) break;
            idx[axis] = 0;
            if (axis == 0) goto done;
        }
        if (n == 0) break;
    }
done:

    // lexicographic order first so deduplication keeps a deterministic
    // representative independent of start order
    std::sort(roots.begin(), roots.end(), lex_less);
    std::vector<std::vector<double>> kept;
    for (auto& r : roots) {
        bool dup = false;
        for (const auto& k : kept)
            if (vec_dist(r, k) < kDedupDistance) {
                dup = true;
                break;
            }
        if (!dup) kept.push_back(std::move(r));
    }

    std::vector<Equilibrium> out;
    out.reserve(kept.size());
    for (const auto& r : kept) out.push_back(classify_local(sys, r));
    return out;
}

Equilibrium classify_local(const SystemDef& sys, std::span<const double> point) {
    Equilibrium eq;
    eq.point.assign(point.begin(), point.end());
    eq.residual_norm = sys.rhs_norm(point);
    if (!(eq.residual_norm < 1e-8))
        throw NotEquilibriumError("point is not an equilibrium: ||f|| = " +
                                  format_double(eq.residual_norm));

    SymMatrix jac = jacobian_sym(sys);
    eq.jacobian = eval_sym_matrix(jac, point, sys.param_values());
    eq.eigen = eigenvalues(eq.jacobian);

    bool any_pos = false, any_neg = false, all_neg = true, any_im = false;
    for (const auto& z : eq.eigen.values) {
        if (z.real() > kMarginalBand) any_pos = true;
        if (z.real() < -kMarginalBand) any_neg = true;
        else all_neg = false;
        if (std::abs(z.imag()) > kMarginalBand) any_im = true;
    }

    if (all_neg) {
        eq.local_class = any_im ? LocalClass::StableFocus : LocalClass::StableNode;
    } else if (any_pos) {
        if (any_neg) eq.local_class = LocalClass::Saddle;
        else eq.local_class = any_im ? LocalClass::UnstableFocus : LocalClass::UnstableNode;
    } else {
        eq.local_class = any_im ? LocalClass::CenterMarginal : LocalClass::Degenerate;
    }
    return eq;
}

}  // namespace odestab

#include "odestab/criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "odestab/error.hpp"

namespace odestab {

namespace {

constexpr double kAbscissaBand = 1e-9;
constexpr double kZeroEpsilonFloor = 1e-12;  // stand-in bound when epsilon = 0
constexpr double kHoldsSlack = 1.05;         // covers sampled-M underestimation
constexpr int kSegmentSamples = 101;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Deterministic draws; layered on the fixed mt19937_64 stream so a seed
// pins every sample bit-for-bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform01() {  // (0, 1]
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

std::vector<std::vector<double>> make_directions(DirectionSet set, std::size_t count,
                                                 std::size_t n, std::uint64_t seed) {
    std::vector<std::vector<double>> dirs;
    if (set == DirectionSet::PositiveOrthant) {
        dirs.emplace_back(n, 1.0 / std::sqrt(static_cast<double>(n)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> plus(n, 0.0), minus(n, 0.0);
            plus[i] = 1.0;
            minus[i] = -1.0;
            dirs.push_back(std::move(plus));
            dirs.push_back(std::move(minus));
        }
    }

    Rng rng(seed);
    while (dirs.size() < count) {
        std::vector<double> d(n);
        double norm2 = 0.0;
        for (auto& di : d) {
            di = rng.normal();
            if (set == DirectionSet::PositiveOrthant) di = std::abs(di);
            norm2 += di * di;
        }
        double norm = std::sqrt(norm2);
        if (norm < 1e-12) continue;
        bool ok = true;
        for (auto& di : d) {
            di /= norm;
            if (set == DirectionSet::PositiveOrthant && di <= 0.0) ok = false;
        }
        if (ok) dirs.push_back(std::move(d));
    }
    return dirs;
}

// spectral norm of a symmetric matrix: largest |eigenvalue|
double sym_spectral_norm(const Matrix& m) {
    SymEigen e = sym_eigen(m);
    return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
}

}  // namespace

std::string_view to_string(DirectionSet s) {
    return s == DirectionSet::PositiveOrthant ? "positive-orthant" : "sphere";
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::GloballyStablePerCriterion: return "globally-stable-per-criterion";
        case Verdict::LocallyStableOnly: return "locally-stable-only";
        case Verdict::UnstablePerCriterion: return "unstable-per-criterion";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::vector<double> CriterionConfig::default_radii() {
    std::vector<double> r(21);
    double v = 1.0;
    for (auto& ri : r) {
        ri = v;
        v *= 2.0;
    }
    return r;
}

void CriterionConfig::validate() const {
    if (!(epsilon >= 0.0)) throw Error("epsilon must be >= 0");
    if (direction_count < 8) throw Error("direction_count must be >= 8");
    if (radii.empty()) throw Error("radius schedule is empty");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw Error("radius schedule must be strictly increasing");
    if (!(radii.front() > 0.0)) throw Error("radii must be positive");
}

double Condition2Result::s_max_at(std::size_t radius_index) const {
    double m = -std::numeric_limits<double>::infinity();
    for (double s : s_values[radius_index])
        if (!std::isnan(s)) m = std::max(m, s);
    return m;
}

Condition1Result condition_one(const std::vector<Equilibrium>& equilibria) {
    Condition1Result out;
    out.conclusive = !equilibria.empty();
    out.holds = out.conclusive;
    for (const auto& eq : equilibria) {
        double abscissa = eq.spectral_abscissa();
        out.spectral_abscissas.push_back(abscissa);
        if (!(abscissa < -kAbscissaBand)) out.holds = false;
    }
    return out;
}

double lambda_max_field(const SystemDef& sys, const HessianBundle& hb,
                        std::span<const double> x) {
    std::span<const double> params = sys.param_values();
    if (hb.mode == HessianMode::Tensor) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& h : hb.matrices)
            m = std::max(m, sym_eigmax(eval_sym_matrix(h, x, params)));
        return m;
    }
    EigenSet e = eigenvalues(eval_sym_matrix(hb.matrices.front(), x, params));
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : e.values) m = std::max(m, z.real());
    return m;
}

Condition2Result condition_two(const SystemDef& sys, const Equilibrium& eq,
                               const CriterionConfig& cfg) {
    cfg.validate();
    const std::size_t n = sys.dim();
    HessianBundle hb = hessian_sym(sys, cfg.hessian_mode);
    auto dirs = make_directions(cfg.direction_set, cfg.direction_count, n, cfg.rng_seed);

    Condition2Result out;
    out.radii = cfg.radii;
    out.s_values.assign(cfg.radii.size(), std::vector<double>(dirs.size(), kNaN));

    double worst = -std::numeric_limits<double>::infinity();
    std::size_t worst_dir = 0;
    for (std::size_t ri = 0; ri < cfg.radii.size(); ++ri) {
        for (std::size_t di = 0; di < dirs.size(); ++di) {
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k)
                x[k] = eq.point[k] + cfg.radii[ri] * dirs[di][k];
            try {
                double lm = lambda_max_field(sys, hb, x);
                double s = lm * cfg.radii[ri] * cfg.radii[ri];
                out.s_values[ri][di] = s;
                if (s > worst) {
                    worst = s;
                    worst_dir = di;
                }
            } catch (const EvalError&) {
                ++out.failed_samples;
            }
        }
    }
    out.worst_direction = dirs[worst_dir];

    double bound = cfg.epsilon == 0.0 ? kZeroEpsilonFloor : cfg.epsilon;
    bool ok = out.failed_samples == 0;
    std::size_t tail = std::min<std::size_t>(3, cfg.radii.size());
    for (std::size_t k = cfg.radii.size() - tail; k < cfg.radii.size(); ++k)
        if (!(out.s_max_at(k) <= bound)) ok = false;
    out.satisfied = ok;
    return out;
}

SimplifiedResult simplified_criterion(const SystemDef& sys, const CriterionConfig& cfg) {
    cfg.validate();
    const std::size_t n = sys.dim();
    validate_box(cfg.sup_region, n);
    HessianBundle hb = hessian_sym(sys, cfg.hessian_mode);

    // at least direction_count^2 samples in total
    double target = std::pow(static_cast<double>(cfg.direction_count) *
                                 static_cast<double>(cfg.direction_count),
                             1.0 / static_cast<double>(n));
    std::size_t per_axis =
        std::max<std::size_t>(cfg.sup_region.grid_per_axis,
                              static_cast<std::size_t>(std::ceil(target)));

    SimplifiedResult out;
    out.sup = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = cfg.sup_region.lower[i] +
                   static_cast<double>(idx[i]) *
                       (cfg.sup_region.upper[i] - cfg.sup_region.lower[i]) /
                       static_cast<double>(per_axis - 1);
        try {
            out.sup = std::max(out.sup, lambda_max_field(sys, hb, x));
        } catch (const EvalError&) {
            ++out.failed_samples;
        }

        std::size_t axis = n;
        bool done = true;
        while (axis-- > 0) {
            if (++idx[axis] < per_axis) {
                done = false;
                break;
            }
            idx[axis] = 0;
        }
        if (done) break;
    }
    return out;
}

RemainderReport remainder_bound(const SystemDef& sys, std::span<const double> x,
                                std::span<const double> base) {
    const std::size_t n = sys.dim();
    HessianBundle hb = hessian_sym(sys, HessianMode::Tensor);

    RemainderReport out;
    out.x.assign(x.begin(), x.end());
    out.base.assign(base.begin(), base.end());
    out.m.assign(n, 0.0);

    std::vector<double> p(n);
    for (int s = 0; s < kSegmentSamples; ++s) {
        double t = static_cast<double>(s) / (kSegmentSamples - 1);
        for (std::size_t i = 0; i < n; ++i) p[i] = base[i] + t * (x[i] - base[i]);
        for (std::size_t k = 0; k < n; ++k) {
            double norm = sym_spectral_norm(eval_sym_matrix(hb.matrices[k], p, sys.param_values()));
            out.m[k] = std::max(out.m[k], norm);
        }
    }

    double dist = vec_dist(x, base);
    out.bound.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.bound[k] = 0.5 * out.m[k] * dist * dist;
    return out;
}

RemainderReport remainder_check(const SystemDef& sys, std::span<const double> x,
                                std::span<const double> base) {
    double base_res = sys.rhs_norm(base);
    if (!(base_res < 1e-8))
        throw NotEquilibriumError("remainder base point is not an equilibrium: ||f|| = " +
                                  format_double(base_res));

    RemainderReport out = remainder_bound(sys, x, base);
    const std::size_t n = sys.dim();

    Matrix j = eval_sym_matrix(jacobian_sym(sys), base, sys.param_values());
    std::vector<double> dx(n);
    for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] - base[i];
    std::vector<double> linear = j.apply(dx);
    std::vector<double> fx = sys.eval_rhs(x);
    std::vector<double> fb = sys.eval_rhs(base);

    out.actual.resize(n);
    out.holds = true;
    for (std::size_t k = 0; k < n; ++k) {
        out.actual[k] = fx[k] - fb[k] - linear[k];
        if (!(std::abs(out.actual[k]) <= out.bound[k] * kHoldsSlack)) out.holds = false;
    }
    return out;
}

Verdict combine_verdict(const Condition1Result& c1, bool condition2_satisfied) {
    if (!c1.conclusive) return Verdict::Inconclusive;
    for (double a : c1.spectral_abscissas)
        if (a > kAbscissaBand) return Verdict::UnstablePerCriterion;
    if (c1.holds)
        return condition2_satisfied ? Verdict::GloballyStablePerCriterion
                                    : Verdict::LocallyStableOnly;
    return Verdict::Inconclusive;  // marginal spectrum
}

namespace {

// Milliseconds spent in `action`, accumulated into *slot when it is wanted.
template <typename F>
auto timed(double* slot, F&& action) {
    const auto start = std::chrono::steady_clock::now();
    auto result = action();
    if (slot != nullptr) {
        *slot = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
    }
    return result;
}

}  // namespace

StabilityVerdict verdict(const SystemDef& sys, const SearchBox& box, const CriterionConfig& cfg) {
    return verdict(sys, box, cfg, nullptr);
}

StabilityVerdict verdict(const SystemDef& sys, const SearchBox& box, const CriterionConfig& cfg,
                         PhaseTimings* timings) {
    cfg.validate();
    validate_box(box, sys.dim());

    StabilityVerdict out;
    out.config = cfg;
    if (out.config.sup_region.lower.empty()) {
        out.config.sup_region = box;  // default scan region: the search box
    }

    double* t_eq = timings != nullptr ? &timings->equilibria_ms : nullptr;
    double* t_c1 = timings != nullptr ? &timings->condition1_ms : nullptr;
    double* t_c2 = timings != nullptr ? &timings->condition2_ms : nullptr;
    double* t_sup = timings != nullptr ? &timings->simplified_ms : nullptr;

    out.equilibria = timed(t_eq, [&] { return find_equilibria(sys, box); });
    out.condition1 = timed(t_c1, [&] { return condition_one(out.equilibria); });
    if (!out.condition1.conclusive) {
        out.verdict = Verdict::Inconclusive;
        out.notes.push_back("no equilibria found in the search box; verdict is inconclusive");
        return out;
    }

    // base point: the equilibrium closest to the origin (ties keep the first,
    // i.e. lexicographically smallest)
    std::size_t base = 0;
    for (std::size_t i = 1; i < out.equilibria.size(); ++i)
        if (vec_norm(out.equilibria[i].point) < vec_norm(out.equilibria[base].point)) base = i;

    out.condition2 = timed(t_c2, [&] { return condition_two(sys, out.equilibria[base], out.config); });
    out.simplified = timed(t_sup, [&] { return simplified_criterion(sys, out.config); });
    out.verdict = combine_verdict(out.condition1, out.condition2.satisfied);

    if (cfg.hessian_mode == HessianMode::PaperRow)
        out.notes.push_back(
            "row-layout hessian mode: the single matrix (i,j) = d2f_i/dx_i dx_j is generally "
            "non-symmetric and its largest real eigenvalue is used in place of a symmetric "
            "eigenvalue");
    if (out.condition2.failed_samples > 0)
        out.notes.push_back("condition 2 marked unsatisfied: " +
                            std::to_string(out.condition2.failed_samples) +
                            " field samples failed to evaluate");
    return out;
}

}  // namespace odestab

#include "odestab/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odestab/error.hpp"
#include "odestab/expr.hpp"
#include "odestab/linalg.hpp"

namespace odestab {

namespace {

constexpr double kMinStep = 1e-8;
constexpr double kMaxStep = 0.1;
constexpr double kStepSafety = 0.9;
constexpr double kMaxGrow = 5.0;
constexpr double kMaxShrink = 0.2;
constexpr double kLandingSlack = 1e-12;  // treat |t_end - t| below this (scaled) as arrival

// Fehlberg 4(5) tableau (no stage-time row: the systems are autonomous). The
// fifth-order weights are the ones propagated (local extrapolation); the
// fourth-order row only feeds the error estimate.
constexpr double kA2[] = {1.0 / 4.0};
constexpr double kA3[] = {3.0 / 32.0, 9.0 / 32.0};
constexpr double kA4[] = {1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0};
constexpr double kA5[] = {439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0};
constexpr double kA6[] = {-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0};
constexpr double kB5[] = {16.0 / 135.0, 0.0,      6656.0 / 12825.0,
                          28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0};
constexpr double kB4[] = {25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0};

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// x + h * sum(coeffs[j] * ks[j]) over the first `count` stages.
std::vector<double> stage_state(const std::vector<double>& x, double h, const double* coeffs,
                                const std::vector<std::vector<double>>& ks, std::size_t count) {
    std::vector<double> out(x);
    for (std::size_t j = 0; j < count; ++j) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * coeffs[j] * ks[j][i];
    }
    return out;
}

// x + c * k
std::vector<double> shifted(const std::vector<double>& x, double c, const std::vector<double>& k) {
    std::vector<double> out(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * k[i];
    return out;
}

class Recorder {
  public:
    Recorder(Trajectory& traj, std::size_t stride) : traj_(traj), stride_(stride) {}

    void initial(double t, const std::vector<double>& x) { append(t, x); }

    void accepted(double t, const std::vector<double>& x) {
        if (stride_ != 0 && traj_.accepted_steps % stride_ == 0) append(t, x);
        last_t_ = t;
        last_x_ = x;
    }

    // The final retained state is always part of the trajectory, whatever the
    // stride skipped.
    void finish() {
        if (!last_x_.empty() && traj_.times.back() != last_t_) append(last_t_, last_x_);
    }

  private:
    void append(double t, const std::vector<double>& x) {
        traj_.times.push_back(t);
        traj_.states.push_back(x);
    }

    Trajectory& traj_;
    std::size_t stride_;
    double last_t_ = 0.0;
    std::vector<double> last_x_;
};

void run_rk4(const SystemDef& sys, Trajectory& traj, std::vector<double> x,
             const IntegrateOptions& opt) {
    Recorder rec(traj, opt.record_stride);
    rec.initial(0.0, x);

    const double h = opt.fixed_step;
    auto full_steps = static_cast<std::size_t>(opt.t_end / h + 1e-9);
    double tail = opt.t_end - static_cast<double>(full_steps) * h;
    if (tail <= kLandingSlack * std::max(1.0, opt.t_end)) tail = 0.0;

    double t = 0.0;
    for (std::size_t step = 0; step < full_steps + (tail > 0.0 ? 1 : 0); ++step) {
        const double hs = step < full_steps ? h : tail;
        std::vector<double> next;
        try {
            auto k1 = sys.eval_rhs(x);
            auto k2 = sys.eval_rhs(shifted(x, hs / 2.0, k1));
            auto k3 = sys.eval_rhs(shifted(x, hs / 2.0, k2));
            auto k4 = sys.eval_rhs(shifted(x, hs, k3));
            next = x;
            for (std::size_t i = 0; i < next.size(); ++i)
                next[i] += hs / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        } catch (const EvalError&) {
            traj.truncated = true;
            traj.stop_reason = "domain error";
            break;
        }
        if (!all_finite(next)) {
            traj.truncated = true;
            traj.stop_reason = "non-finite state";
            break;
        }
        x = std::move(next);
        t = step < full_steps ? static_cast<double>(step + 1) * h : opt.t_end;
        ++traj.accepted_steps;
        rec.accepted(t, x);
        if (vec_norm(x) > opt.divergence_norm) {
            traj.truncated = true;
            traj.stop_reason = "divergence";
            break;
        }
    }
    rec.finish();
}

void run_rkf45(const SystemDef& sys, Trajectory& traj, std::vector<double> x,
               const IntegrateOptions& opt) {
    Recorder rec(traj, opt.record_stride);
    rec.initial(0.0, x);

    const std::size_t n = x.size();
    double t = 0.0;
    double h = std::min(kMaxStep, opt.t_end);
    std::vector<std::vector<double>> ks(6);

    while (t < opt.t_end - kLandingSlack * std::max(1.0, opt.t_end)) {
        double hs = std::min(h, opt.t_end - t);

        bool reject = false;
        double err = 0.0;
        std::vector<double> x5;
        try {
            ks[0] = sys.eval_rhs(x);
            ks[1] = sys.eval_rhs(stage_state(x, hs, kA2, ks, 1));
            ks[2] = sys.eval_rhs(stage_state(x, hs, kA3, ks, 2));
            ks[3] = sys.eval_rhs(stage_state(x, hs, kA4, ks, 3));
            ks[4] = sys.eval_rhs(stage_state(x, hs, kA5, ks, 4));
            ks[5] = sys.eval_rhs(stage_state(x, hs, kA6, ks, 5));
            x5 = stage_state(x, hs, kB5, ks, 6);
            for (std::size_t i = 0; i < n; ++i) {
                double e = 0.0;
                for (std::size_t j = 0; j < 6; ++j) e += (kB5[j] - kB4[j]) * ks[j][i];
                err += (hs * e) * (hs * e);
            }
            err = std::sqrt(err);
        } catch (const EvalError&) {
            traj.truncated = true;
            traj.stop_reason = "domain error";
            break;
        }

        const double target = opt.tol * (1.0 + vec_norm(x));
        if (!std::isfinite(err) || !all_finite(x5) || err > target) reject = true;

        if (reject) {
            ++traj.rejected_steps;
            if (hs <= kMinStep * (1.0 + 1e-9))
                throw StiffnessError("integration requires a step below 1e-8 at t = " +
                                     format_double(t));
            double factor = kMaxShrink;
            if (std::isfinite(err) && err > 0.0)
                factor = std::clamp(kStepSafety * std::pow(target / err, 0.25), kMaxShrink,
                                    kStepSafety);
            h = std::max(hs * factor, kMinStep);
            continue;
        }

        t += hs;
        x = std::move(x5);
        ++traj.accepted_steps;
        rec.accepted(t, x);
        if (vec_norm(x) > opt.divergence_norm) {
            traj.truncated = true;
            traj.stop_reason = "divergence";
            break;
        }

        double factor = kMaxGrow;
        if (err > 0.0)
            factor = std::clamp(kStepSafety * std::pow(target / err, 0.2), kMaxShrink, kMaxGrow);
        h = std::clamp(hs * factor, kMinStep, kMaxStep);
    }
    rec.finish();
}

}  // namespace

std::string_view to_string(Method m) {
    return m == Method::Rk4Fixed ? "rk4-fixed" : "rkf45-adaptive";
}

Method method_from_string(std::string_view s) {
    if (s == "rk4-fixed") return Method::Rk4Fixed;
    if (s == "rkf45-adaptive") return Method::Rkf45Adaptive;
    throw Error("unknown integration method '" + std::string(s) +
                "' (expected rk4-fixed or rkf45-adaptive)");
}

Trajectory integrate(const SystemDef& sys, std::span<const double> ic,
                     const IntegrateOptions& opt) {
    if (ic.size() != sys.dim())
        throw Error("initial condition has " + std::to_string(ic.size()) +
                    " components, system has " + std::to_string(sys.dim()));
    if (!(opt.t_end > 0.0) || !std::isfinite(opt.t_end))
        throw Error("t_end must be positive and finite");
    if (opt.method == Method::Rk4Fixed && !(opt.fixed_step > 0.0))
        throw Error("fixed step must be positive");
    if (opt.method == Method::Rkf45Adaptive && !(opt.tol > 0.0))
        throw Error("adaptive tolerance must be positive");

    std::vector<double> x(ic.begin(), ic.end());
    sys.eval_rhs(x);  // a domain error at the initial point is the caller's problem

    Trajectory traj;
    traj.method = opt.method;
    if (opt.method == Method::Rk4Fixed)
        run_rk4(sys, traj, std::move(x), opt);
    else
        run_rkf45(sys, traj, std::move(x), opt);

    try {
        traj.final_deriv_norm = sys.rhs_norm(traj.final_state());
    } catch (const EvalError&) {
        traj.final_deriv_norm = std::numeric_limits<double>::quiet_NaN();
    }
    return traj;
}

std::string_view to_string(Fate::Kind k) {
    switch (k) {
        case Fate::Kind::Converged: return "converged";
        case Fate::Kind::Diverged: return "diverged";
        case Fate::Kind::Undetermined: return "undetermined";
    }
    return "undetermined";
}

Fate classify_fate(const Trajectory& traj, const std::vector<Equilibrium>& equilibria) {
    constexpr double kDivergenceNorm = 1e6;
    constexpr double kConvergedDistance = 1e-4;
    constexpr double kConvergedDerivNorm = 1e-6;

    const auto& x = traj.final_state();
    Fate fate;

    const double norm = vec_norm(x);
    if (norm > kDivergenceNorm) {
        fate.kind = Fate::Kind::Diverged;
        fate.exit_time = traj.final_time();
        fate.exit_norm = norm;
        return fate;
    }

    if (!equilibria.empty()) {
        std::size_t best = 0;
        double best_dist = vec_dist(x, equilibria[0].point);
        for (std::size_t i = 1; i < equilibria.size(); ++i) {
            const double d = vec_dist(x, equilibria[i].point);
            if (d < best_dist) {  // strict: ties keep the smallest index
                best = i;
                best_dist = d;
            }
        }
        if (best_dist < kConvergedDistance && traj.final_deriv_norm < kConvergedDerivNorm) {
            fate.kind = Fate::Kind::Converged;
            fate.equilibrium_index = best;
            fate.final_distance = best_dist;
            return fate;
        }
    }

    fate.kind = Fate::Kind::Undetermined;
    fate.final_state = x;
    fate.note = traj.stop_reason;
    return fate;
}

std::size_t GridSpec::total() const {
    std::size_t n = 1;
    for (std::size_t c : counts) n *= c;
    return n;
}

std::vector<double> GridSpec::node(std::size_t flat_index) const {
    std::vector<double> point(counts.size());
    for (std::size_t a = counts.size(); a-- > 0;) {
        const std::size_t i = flat_index % counts[a];
        flat_index /= counts[a];
        point[a] = counts[a] == 1 ? lower[a]
                                  : lower[a] + static_cast<double>(i) * (upper[a] - lower[a]) /
                                                   static_cast<double>(counts[a] - 1);
    }
    return point;
}

void validate_grid(const GridSpec& grid, std::size_t dim) {
    if (grid.lower.size() != dim || grid.upper.size() != dim || grid.counts.size() != dim)
        throw Error("grid spec does not match system dimension " + std::to_string(dim));
    for (std::size_t a = 0; a < dim; ++a) {
        if (!std::isfinite(grid.lower[a]) || !std::isfinite(grid.upper[a]))
            throw Error("grid bounds must be finite");
        if (grid.lower[a] > grid.upper[a])
            throw Error("grid lower bound exceeds upper bound on axis " + std::to_string(a));
        if (grid.counts[a] == 0) throw Error("grid needs at least one node per axis");
    }
}

std::size_t FateMap::count(Fate::Kind k) const {
    return static_cast<std::size_t>(
        std::count_if(fates.begin(), fates.end(), [k](const Fate& f) { return f.kind == k; }));
}

FateMap basin_scan(const SystemDef& sys, const GridSpec& grid,
                   const std::vector<Equilibrium>& equilibria, const IntegrateOptions& opt) {
    validate_grid(grid, sys.dim());

    IntegrateOptions node_opt = opt;
    node_opt.record_stride = 0;  // classification only needs endpoints

    FateMap map;
    map.grid = grid;
    map.fates.reserve(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) {
        const auto start = grid.node(i);
        try {
            map.fates.push_back(classify_fate(integrate(sys, start, node_opt), equilibria));
        } catch (const Error& e) {
            Fate fate;
            fate.kind = Fate::Kind::Undetermined;
            fate.final_state = start;
            fate.note = e.what();
            map.fates.push_back(std::move(fate));
        }
    }
    return map;
}

}  // namespace odestab

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odestab/equilibria.hpp"
#include "odestab/system.hpp"

namespace odestab {

enum class Method { Rk4Fixed, Rkf45Adaptive };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);  // throws Error on unknown names

struct IntegrateOptions {
    double t_end = 100.0;
    Method method = Method::Rkf45Adaptive;
    double tol = 1e-8;             // adaptive local error target, scaled by 1 + ||x||
    double fixed_step = 1e-3;      // rk4 step
    double divergence_norm = 1e6;  // stop once ||x|| exceeds this
    std::size_t record_stride = 1; // keep every k-th accepted state; 0 = endpoints only
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    Method method = Method::Rkf45Adaptive;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    bool truncated = false;         // stopped before t_end
    std::string stop_reason;        // "divergence", "non-finite state", "domain error"
    double final_deriv_norm = 0.0;  // ||f|| at the final retained state; NaN if unavailable

    const std::vector<double>& final_state() const { return states.back(); }
    double final_time() const { return times.back(); }
};

// Fixed-step classical RK4 or adaptive Fehlberg 4(5) with local extrapolation.
// Adaptive steps live in [1e-8, 0.1]; a rejected step already at the floor is
// a stiffness failure (StiffnessError). A domain error at the initial point
// throws; later domain errors truncate the trajectory instead.
Trajectory integrate(const SystemDef& sys, std::span<const double> ic,
                     const IntegrateOptions& opt);

struct Fate {
    enum class Kind { Converged, Diverged, Undetermined };
    Kind kind = Kind::Undetermined;
    // Converged
    std::size_t equilibrium_index = 0;
    double final_distance = 0.0;
    // Diverged
    double exit_time = 0.0;
    double exit_norm = 0.0;
    // Undetermined
    std::vector<double> final_state;
    std::string note;
};

std::string_view to_string(Fate::Kind k);

// Final-state classification: norm above the divergence threshold wins;
// otherwise the nearest equilibrium (ties to the smallest index) if within
// 1e-4 and the field there is below 1e-6; otherwise undetermined.
Fate classify_fate(const Trajectory& traj, const std::vector<Equilibrium>& equilibria);

struct GridSpec {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> counts;  // nodes per axis, >= 1

    std::size_t total() const;
    std::vector<double> node(std::size_t flat_index) const;  // row-major
};

void validate_grid(const GridSpec& grid, std::size_t dim);

struct FateMap {
    GridSpec grid;
    std::vector<Fate> fates;  // row-major, one per node

    std::size_t count(Fate::Kind k) const;
};

// Integrates every grid node and classifies it against the supplied
// equilibria. Per-node stiffness failures become Undetermined entries with a
// note; the scan itself never aborts.
FateMap basin_scan(const SystemDef& sys, const GridSpec& grid,
                   const std::vector<Equilibrium>& equilibria, const IntegrateOptions& opt);

}  // namespace odestab

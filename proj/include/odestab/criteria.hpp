#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odestab/equilibria.hpp"

namespace odestab {

// Which family of rays is used to probe the large-||X|| behavior of the
// Hessian field: all-positive coordinates, or the whole unit sphere.
enum class DirectionSet { PositiveOrthant, Sphere };

std::string_view to_string(DirectionSet s);

struct CriterionConfig {
    double epsilon = 1e-6;          // bound the radial samples must stay under
    HessianMode hessian_mode = HessianMode::Tensor;
    DirectionSet direction_set = DirectionSet::PositiveOrthant;
    std::size_t direction_count = 16;
    std::vector<double> radii = default_radii();
    std::uint64_t rng_seed = 0;
    SearchBox sup_region;           // region for the field-supremum scan

    // geometric schedule 1, 2, 4, ..., 2^20 (top ~1.05e6)
    static std::vector<double> default_radii();

    // epsilon >= 0, direction_count >= 8, radii strictly increasing
    void validate() const;
};

struct Condition1Result {
    bool conclusive = false;  // false when no equilibria were supplied
    bool holds = false;       // every eigenvalue real part < -1e-9
    std::vector<double> spectral_abscissas;  // one per equilibrium
};

struct Condition2Result {
    bool satisfied = false;
    std::vector<double> radii;
    // s(r,d) = lambda_max_field(Xe + r*d) * r^2, indexed [radius][direction];
    // NaN marks a sample whose evaluation failed
    std::vector<std::vector<double>> s_values;
    std::vector<double> worst_direction;  // unit vector attaining the max s
    std::size_t failed_samples = 0;

    double s_max_at(std::size_t radius_index) const;  // NaN-ignoring row max
};

struct RemainderReport {
    std::vector<double> x;
    std::vector<double> base;
    std::vector<double> actual;  // f(x) - f(base) - J(base)(x - base), per component
    std::vector<double> m;       // sampled bound on the second derivative, per component
    std::vector<double> bound;   // m/2 * ||x - base||^2
    bool holds = false;          // |actual| <= bound * 1.05 componentwise
};

struct SimplifiedResult {
    double sup = 0.0;  // supremum of lambda_max_field over the scanned region
    std::size_t failed_samples = 0;

    bool holds() const { return failed_samples == 0 && sup <= 1e-9; }
};

enum class Verdict {
    GloballyStablePerCriterion,
    LocallyStableOnly,
    UnstablePerCriterion,
    Inconclusive,
};

std::string_view to_string(Verdict v);

struct StabilityVerdict {
    Verdict verdict = Verdict::Inconclusive;
    std::vector<Equilibrium> equilibria;
    Condition1Result condition1;
    Condition2Result condition2;
    SimplifiedResult simplified;
    CriterionConfig config;
    std::vector<std::string> notes;
};

// First criterion: every equilibrium spectrum strictly in the left half-plane
// (real parts < -1e-9). An empty list gives conclusive = false.
Condition1Result condition_one(const std::vector<Equilibrium>& equilibria);

// Largest Hessian eigenvalue at a point: tensor mode takes the max over the
// per-component symmetric matrices; row mode takes the max real part of the
// single (generally non-symmetric) matrix's spectrum.
double lambda_max_field(const SystemDef& sys, const HessianBundle& hb,
                        std::span<const double> x);

// Second criterion: radial sampling of s(r,d) = lambda_max_field * r^2 along
// deterministic directions. Satisfied when the directional maxima at the
// three largest radii all stay within epsilon (1e-12 when epsilon = 0).
Condition2Result condition_two(const SystemDef& sys, const Equilibrium& eq,
                               const CriterionConfig& cfg);

// Supremum of lambda_max_field over a dense grid on cfg.sup_region
// (at least direction_count^2 samples).
SimplifiedResult simplified_criterion(const SystemDef& sys, const CriterionConfig& cfg);

// Second-order Taylor error bound per component: M_k/2 * ||x - base||^2 with
// M_k the largest Hessian spectral norm over 101 samples of the segment.
RemainderReport remainder_bound(const SystemDef& sys, std::span<const double> x,
                                std::span<const double> base);

// Measures the actual linearization error against the bound (with 5% slack
// for the sampled M). Throws NotEquilibriumError unless ||f(base)|| < 1e-8.
RemainderReport remainder_check(const SystemDef& sys, std::span<const double> x,
                                std::span<const double> base);

// Pure combination rule, factored out so every branch is directly testable.
Verdict combine_verdict(const Condition1Result& c1, bool condition2_satisfied);

// Wall-clock milliseconds spent per pipeline phase.
struct PhaseTimings {
    double equilibria_ms = 0.0;
    double condition1_ms = 0.0;
    double condition2_ms = 0.0;
    double simplified_ms = 0.0;
};

// Full pipeline: find equilibria, evaluate both criteria and the supremum
// scan, combine, and collect discrepancy notes.
StabilityVerdict verdict(const SystemDef& sys, const SearchBox& box, const CriterionConfig& cfg);
StabilityVerdict verdict(const SystemDef& sys, const SearchBox& box, const CriterionConfig& cfg,
                         PhaseTimings* timings);

}  // namespace odestab

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "odestab/linalg.hpp"
#include "odestab/system.hpp"

namespace odestab {

// Axis-aligned region scanned for equilibria (and reused as the sampling
// region for the field-supremum scan).
struct SearchBox {
    std::vector<double> lower;
    std::vector<double> upper;
    std::size_t grid_per_axis = 5;
};

// Throws Error unless lower < upper componentwise, sizes match dim and the
// grid has at least two nodes per axis.
void validate_box(const SearchBox& box, std::size_t dim);

enum class LocalClass {
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    Saddle,
    CenterMarginal,
    Degenerate,
};

std::string_view to_string(LocalClass c);

struct Equilibrium {
    std::vector<double> point;
    double residual_norm = 0.0;
    Matrix jacobian;
    EigenSet eigen;
    LocalClass local_class = LocalClass::Degenerate;

    double spectral_abscissa() const;  // largest eigenvalue real part
};

// Numeric value of a symbolic matrix at a state point.
Matrix eval_sym_matrix(const SymMatrix& m, std::span<const double> state,
                       std::span<const double> params);

// Damped Newton iteration from every grid node of the box. Roots with
// ||f|| < 1e-10 that land inside the box (inflated by 1e-6) are deduplicated
// at pairwise distance 1e-6 and returned sorted lexicographically.
std::vector<Equilibrium> find_equilibria(const SystemDef& sys, const SearchBox& box);

// Builds the full record (jacobian, spectrum, class) for a point already
// known to be an equilibrium. Throws NotEquilibriumError if ||f|| >= 1e-8.
Equilibrium classify_local(const SystemDef& sys, std::span<const double> point);

}  // namespace odestab

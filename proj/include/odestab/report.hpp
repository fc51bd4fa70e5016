#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "odestab/criteria.hpp"
#include "odestab/integrate.hpp"
#include "odestab/system.hpp"

namespace odestab {

inline constexpr std::string_view kToolVersion = "0.1.0";

// FNV-1a (64-bit) of the raw source text, as 16 lowercase hex digits.
std::string source_digest(std::string_view text);

// Wall-clock milliseconds per analysis phase; all zero under --deterministic.
struct ReportTimings {
    double parse = 0.0;
    double equilibria = 0.0;
    double condition1 = 0.0;
    double condition2 = 0.0;
    double simplified = 0.0;
    double total = 0.0;
};

// Serializes an analysis result to the report schema: version, system
// {name, digest}, config, equilibria [{point, residual, eigenvalues:[{re,
// im}], class}], condition1 {holds, spectral_abscissa_per_equilibrium},
// condition2 {satisfied, epsilon, radii, s_max_per_radius, worst_direction},
// simplified {sup, region}, verdict, notes, timings_ms. Two-space indent,
// trailing newline.
std::string analysis_report_json(const SystemDef& sys, std::string_view digest,
                                 const StabilityVerdict& result, const SearchBox& box,
                                 const ReportTimings& timings);

// Writes via a sibling temp file and an atomic rename; the target never holds
// a partial report.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// 17 significant digits: every finite double reparses to the value that
// produced it.
std::string csv_number(double v);

struct FieldSample {
    double x, y, dx, dy;
};

// Header x,y,dx,dy then one row per sample, LF endings.
std::string field_csv(const std::vector<FieldSample>& samples);

// Header traj_id,t,x1..xn then one row per recorded state, LF endings.
std::string trajectories_csv(const std::vector<Trajectory>& trajectories, std::size_t dim);

// Everything the vector-field rendering needs, already projected onto the two
// plotted axes.
struct PortraitScene {
    double x_lo = -1.0, x_hi = 1.0;
    double y_lo = -1.0, y_hi = 1.0;
    std::string x_label, y_label;
    std::vector<FieldSample> field;
    std::vector<std::vector<std::array<double, 2>>> trajectories;
    std::vector<std::array<double, 2>> equilibria;
};

// Static SVG: field arrows scaled against the 95th-percentile magnitude,
// trajectories as polylines, equilibria as circles, all clipped to the frame.
std::string portrait_svg(const PortraitScene& scene);

}  // namespace odestab

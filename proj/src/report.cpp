#include "odestab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "odestab/error.hpp"

namespace odestab {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json json_point(const std::vector<double>& p) { return ordered_json(p); }

ordered_json json_box(const SearchBox& box) {
    ordered_json j;
    j["lower"] = box.lower;
    j["upper"] = box.upper;
    j["grid_per_axis"] = box.grid_per_axis;
    return j;
}

}  // namespace

std::string source_digest(std::string_view text) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string analysis_report_json(const SystemDef& sys, std::string_view digest,
                                 const StabilityVerdict& result, const SearchBox& box,
                                 const ReportTimings& timings) {
    ordered_json j;
    j["version"] = kToolVersion;
    j["system"] = {{"name", sys.name()}, {"digest", digest}};

    ordered_json config;
    config["epsilon"] = result.config.epsilon;
    config["hessian_mode"] = to_string(result.config.hessian_mode);
    config["direction_set"] = to_string(result.config.direction_set);
    config["direction_count"] = result.config.direction_count;
    config["radii"] = result.config.radii;
    config["rng_seed"] = result.config.rng_seed;
    config["box"] = json_box(box);
    config["sup_region"] = json_box(result.config.sup_region);
    j["config"] = std::move(config);

    ordered_json eqs = ordered_json::array();
    for (const auto& eq : result.equilibria) {
        ordered_json e;
        e["point"] = json_point(eq.point);
        e["residual"] = eq.residual_norm;
        ordered_json vals = ordered_json::array();
        for (const auto& z : eq.eigen.values)
            vals.push_back(ordered_json{{"re", z.real()}, {"im", z.imag()}});
        e["eigenvalues"] = std::move(vals);
        e["class"] = to_string(eq.local_class);
        eqs.push_back(std::move(e));
    }
    j["equilibria"] = std::move(eqs);

    j["condition1"] = {{"holds", result.condition1.holds},
                       {"spectral_abscissa_per_equilibrium", result.condition1.spectral_abscissas}};

    ordered_json c2;
    c2["satisfied"] = result.condition2.satisfied;
    c2["epsilon"] = result.config.epsilon;
    c2["radii"] = result.condition2.radii;
    ordered_json smax = ordered_json::array();
    for (std::size_t i = 0; i < result.condition2.radii.size(); ++i)
        smax.push_back(result.condition2.s_max_at(i));
    c2["s_max_per_radius"] = std::move(smax);
    c2["worst_direction"] = result.condition2.worst_direction;
    j["condition2"] = std::move(c2);

    j["simplified"] = {{"sup", result.simplified.sup},
                       {"region", json_box(result.config.sup_region)}};

    j["verdict"] = to_string(result.verdict);
    j["notes"] = result.notes;

    ordered_json t;
    t["parse"] = timings.parse;
    t["equilibria"] = timings.equilibria;
    t["condition1"] = timings.condition1;
    t["condition2"] = timings.condition2;
    t["simplified"] = timings.simplified;
    t["total"] = timings.total;
    j["timings_ms"] = std::move(t);

    return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path parent = path.parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
        if (ec) throw Error("cannot create directory " + parent.string() + ": " + ec.message());
    }

    const fs::path temp = path.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + temp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + temp.string());
    }
    std::error_code ec;
    fs::rename(temp, path, ec);
    if (ec) {
        fs::remove(temp);
        throw Error("cannot move " + temp.string() + " into place: " + ec.message());
    }
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string field_csv(const std::vector<FieldSample>& samples) {
    std::string out = "x,y,dx,dy\n";
    for (const auto& s : samples) {
        out += csv_number(s.x) + ',' + csv_number(s.y) + ',' + csv_number(s.dx) + ',' +
               csv_number(s.dy) + '\n';
    }
    return out;
}

std::string trajectories_csv(const std::vector<Trajectory>& trajectories, std::size_t dim) {
    std::string out = "traj_id,t";
    for (std::size_t i = 0; i < dim; ++i) out += ",x" + std::to_string(i + 1);
    out += '\n';
    for (std::size_t id = 0; id < trajectories.size(); ++id) {
        const auto& traj = trajectories[id];
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            out += std::to_string(id) + ',' + csv_number(traj.times[k]);
            for (double c : traj.states[k]) out += ',' + csv_number(c);
            out += '\n';
        }
    }
    return out;
}

namespace {

constexpr double kCanvas = 720.0;
constexpr double kMargin = 60.0;
constexpr double kPlot = kCanvas - 2.0 * kMargin;

const char* kPalette[] = {"#0b5394", "#990000", "#38761d", "#b45f06",
                          "#674ea7", "#134f5c", "#741b47", "#7f6000"};

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string portrait_svg(const PortraitScene& scene) {
    const double x_span = scene.x_hi > scene.x_lo ? scene.x_hi - scene.x_lo : 1.0;
    const double y_span = scene.y_hi > scene.y_lo ? scene.y_hi - scene.y_lo : 1.0;
    const auto map_x = [&](double x) { return kMargin + (x - scene.x_lo) / x_span * kPlot; };
    const auto map_y = [&](double y) { return kMargin + (scene.y_hi - y) / y_span * kPlot; };

    // Arrow lengths are normalized against the 95th-percentile magnitude so a
    // few huge vectors cannot flatten the rest of the field into dots.
    std::vector<double> mags;
    mags.reserve(scene.field.size());
    for (const auto& s : scene.field) {
        const double m = std::hypot(s.dx, s.dy);
        if (std::isfinite(m)) mags.push_back(m);
    }
    double p95 = 1.0;
    if (!mags.empty()) {
        std::sort(mags.begin(), mags.end());
        const auto idx = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(mags.size() - 1)));
        if (mags[idx] > 0.0) p95 = mags[idx];
    }
    const double cell =
        kPlot / std::sqrt(static_cast<double>(std::max<std::size_t>(scene.field.size(), 1)));

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas << "\" height=\""
        << kCanvas << "\" viewBox=\"0 0 " << kCanvas << " " << kCanvas << "\">\n";
    svg << "  <defs>\n"
        << "    <marker id=\"tip\" viewBox=\"0 0 10 10\" refX=\"8\" refY=\"5\" markerWidth=\"4\""
        << " markerHeight=\"4\" orient=\"auto-start-reverse\">\n"
        << "      <path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#607d8b\"/>\n"
        << "    </marker>\n"
        << "    <clipPath id=\"plot\"><rect x=\"" << kMargin << "\" y=\"" << kMargin
        << "\" width=\"" << kPlot << "\" height=\"" << kPlot << "\"/></clipPath>\n"
        << "  </defs>\n";
    svg << "  <rect x=\"0\" y=\"0\" width=\"" << kCanvas << "\" height=\"" << kCanvas
        << "\" fill=\"#ffffff\"/>\n";
    svg << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot
        << "\" height=\"" << kPlot << "\" fill=\"none\" stroke=\"#263238\"/>\n";

    // axis labels and window extents
    svg << "  <g font-family=\"monospace\" font-size=\"14\" fill=\"#263238\">\n";
    svg << "    <text x=\"" << kCanvas / 2 << "\" y=\"" << kCanvas - 18
        << "\" text-anchor=\"middle\">" << scene.x_label << "</text>\n";
    svg << "    <text x=\"18\" y=\"" << kCanvas / 2 << "\" text-anchor=\"middle\" transform=\""
        << "rotate(-90 18 " << kCanvas / 2 << ")\">" << scene.y_label << "</text>\n";
    svg << "    <text x=\"" << kMargin << "\" y=\"" << kCanvas - 38
        << "\" text-anchor=\"middle\">" << format_double(scene.x_lo) << "</text>\n";
    svg << "    <text x=\"" << kCanvas - kMargin << "\" y=\"" << kCanvas - 38
        << "\" text-anchor=\"middle\">" << format_double(scene.x_hi) << "</text>\n";
    svg << "    <text x=\"" << kMargin - 8 << "\" y=\"" << kCanvas - kMargin + 5
        << "\" text-anchor=\"end\">" << format_double(scene.y_lo) << "</text>\n";
    svg << "    <text x=\"" << kMargin - 8 << "\" y=\"" << kMargin + 5
        << "\" text-anchor=\"end\">" << format_double(scene.y_hi) << "</text>\n";
    svg << "  </g>\n";

    svg << "  <g clip-path=\"url(#plot)\">\n";

    svg << "    <g stroke=\"#607d8b\" stroke-width=\"1\">\n";
    for (const auto& s : scene.field) {
        const double m = std::hypot(s.dx, s.dy);
        if (!std::isfinite(m)) continue;
        const double cx = map_x(s.x);
        const double cy = map_y(s.y);
        if (m == 0.0) {
            svg << "      <circle cx=\"" << px(cx) << "\" cy=\"" << px(cy)
                << "\" r=\"1.5\" fill=\"#607d8b\" stroke=\"none\"/>\n";
            continue;
        }
        const double len = 0.9 * cell * std::min(m / p95, 1.25);
        const double ex = cx + s.dx / m * len;
        const double ey = cy - s.dy / m * len;  // svg y grows downward
        svg << "      <line x1=\"" << px(cx) << "\" y1=\"" << px(cy) << "\" x2=\"" << px(ex)
            << "\" y2=\"" << px(ey) << "\" marker-end=\"url(#tip)\"/>\n";
    }
    svg << "    </g>\n";

    for (std::size_t i = 0; i < scene.trajectories.size(); ++i) {
        std::string points;
        for (const auto& p : scene.trajectories[i]) {
            if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
            points += px(map_x(p[0])) + ',' + px(map_y(p[1])) + ' ';
        }
        if (points.size() < 2) continue;
        points.pop_back();
        svg << "    <polyline points=\"" << points << "\" fill=\"none\" stroke=\""
            << kPalette[i % (sizeof kPalette / sizeof kPalette[0])]
            << "\" stroke-width=\"1.2\"/>\n";
    }

    for (const auto& eq : scene.equilibria) {
        svg << "    <circle cx=\"" << px(map_x(eq[0])) << "\" cy=\"" << px(map_y(eq[1]))
            << "\" r=\"5\" fill=\"#ffffff\" stroke=\"#d32f2f\" stroke-width=\"2\"/>\n";
    }

    svg << "  </g>\n</svg>\n";
    return svg.str();
}

}  // namespace odestab

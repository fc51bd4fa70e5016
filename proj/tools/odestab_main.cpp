// Command-line front end: analyze | portrait | simulate | equilibria.
// Exit codes: analyze maps the verdict to 0..3; usage errors are 64, file and
// DSL errors 65, anything unexpected 70.
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "odestab/criteria.hpp"
#include "odestab/equilibria.hpp"
#include "odestab/error.hpp"
#include "odestab/integrate.hpp"
#include "odestab/report.hpp"
#include "odestab/system.hpp"

namespace {

using namespace odestab;

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitInternal = 70;

struct CliError {
    int code;
    std::string message;
};

CliError usage(std::string msg) { return CliError{kExitUsage, std::move(msg)}; }

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(text.substr(start));
            return parts;
        }
        parts.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

double to_double(const std::string& text, const std::string& what) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw usage("cannot read " + what + " from '" + text + "'");
    return v;
}

std::size_t to_count(const std::string& text, const std::string& what) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0' || v == 0)
        throw usage(what + " must be a positive integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

// "LO:HI,LO:HI,..." -> per-axis ranges
std::vector<std::pair<double, double>> parse_ranges(const std::string& text,
                                                    const std::string& flag) {
    std::vector<std::pair<double, double>> ranges;
    for (const auto& part : split(text, ',')) {
        const auto bounds = split(part, ':');
        if (bounds.size() != 2)
            throw usage(flag + " expects LO:HI pairs separated by commas, got '" + text + "'");
        ranges.emplace_back(to_double(bounds[0], flag + " lower bound"),
                            to_double(bounds[1], flag + " upper bound"));
    }
    return ranges;
}

// "AxB[xC...]" -> per-axis node counts
std::vector<std::size_t> parse_counts(const std::string& text, const std::string& flag) {
    std::vector<std::size_t> counts;
    for (const auto& part : split(text, 'x')) counts.push_back(to_count(part, flag));
    return counts;
}

std::vector<double> parse_point(const std::string& text, std::size_t dim,
                                const std::string& flag) {
    const auto parts = split(text, ',');
    if (parts.size() != dim)
        throw usage(flag + " expects " + std::to_string(dim) + " comma-separated values, got '" +
                    text + "'");
    std::vector<double> point;
    point.reserve(dim);
    for (const auto& part : parts) point.push_back(to_double(part, flag + " component"));
    return point;
}

std::string format_point(std::span<const double> p) {
    std::string out = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i > 0) out += ", ";
        out += format_double(p[i]);
    }
    return out + ")";
}

std::string format_complex(std::complex<double> z) {
    if (z.imag() == 0.0) return format_double(z.real());
    return format_double(z.real()) + (z.imag() < 0.0 ? " - " : " + ") +
           format_double(std::abs(z.imag())) + "i";
}

struct CommonOpts {
    std::string system_path;
    std::string out;
    std::vector<std::string> params;
    std::uint64_t seed = 0;
    bool deterministic = false;
};

void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("system", c.system_path, "system definition file")->required();
    sub->add_option("--out", c.out, "output path (analyze/equilibria: report file; "
                                    "portrait: basename; simulate: trajectory CSV)");
    sub->add_option("--param", c.params, "override a parameter as NAME=VALUE (repeatable)");
    sub->add_option("--seed", c.seed, "seed for sampled directions and trajectory starts");
    sub->add_flag("--deterministic", c.deterministic,
                  "zero the timing fields so identical runs emit identical bytes");
}

SystemDef load_system(const CommonOpts& common) {
    std::ifstream in(common.system_path, std::ios::binary);
    if (!in) throw CliError{kExitData, "cannot open " + common.system_path};
    std::string source((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    SystemDef sys = [&] {
        try {
            return parse_system(source);
        } catch (const odestab::ParseError& e) {
            throw CliError{kExitData, common.system_path + ":" + std::to_string(e.line) + ":" +
                                          std::to_string(e.col) + ": " + e.what()};
        }
    }();

    for (const auto& spec : common.params) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0)
            throw usage("--param expects NAME=VALUE, got '" + spec + "'");
        const std::string name = spec.substr(0, eq);
        const double value = to_double(spec.substr(eq + 1), "--param " + name);
        try {
            sys = sys.with_param(name, value);
        } catch (const Error& e) {
            throw usage(e.what());
        }
    }
    return sys;
}

SearchBox make_box(const std::string& box_spec, std::size_t dim, std::size_t grid,
                   const std::string& flag) {
    SearchBox box;
    box.grid_per_axis = grid;
    if (box_spec.empty()) {
        box.lower.assign(dim, -5.0);
        box.upper.assign(dim, 5.0);
    } else {
        const auto ranges = parse_ranges(box_spec, flag);
        if (ranges.size() != dim)
            throw usage(flag + " needs one LO:HI pair per state variable (" +
                        std::to_string(dim) + ")");
        for (const auto& [lo, hi] : ranges) {
            box.lower.push_back(lo);
            box.upper.push_back(hi);
        }
    }
    try {
        validate_box(box, dim);
    } catch (const Error& e) {
        throw usage(e.what());
    }
    return box;
}

// --------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
    double epsilon = 1e-6;
    std::string hessian_mode = "tensor";
    std::string directions = "positive-orthant";
    std::size_t direction_count = 16;
    std::string box_spec;
    std::size_t grid = 5;
    double r_max = 0.0;  // 0: keep the default radius schedule
    std::string sup_box_spec;
    std::vector<std::string> expected;
};

int run_analyze(const CommonOpts& common, const AnalyzeOpts& opts) {
    const double t_start = now_ms();
    SystemDef sys = load_system(common);
    const double t_parsed = now_ms();

    std::ifstream in(common.system_path, std::ios::binary);
    std::string source((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const SearchBox box = make_box(opts.box_spec, sys.dim(), opts.grid, "--box");

    CriterionConfig cfg;
    cfg.epsilon = opts.epsilon;
    cfg.hessian_mode = opts.hessian_mode == "tensor" ? HessianMode::Tensor : HessianMode::PaperRow;
    cfg.direction_set = opts.directions == "sphere" ? DirectionSet::Sphere
                                                    : DirectionSet::PositiveOrthant;
    cfg.direction_count = opts.direction_count;
    cfg.rng_seed = common.seed;
    if (opts.r_max > 0.0) {
        if (opts.r_max < 1.0) throw usage("--r-max must be at least 1");
        cfg.radii = {1.0};
        while (cfg.radii.back() < opts.r_max) cfg.radii.push_back(cfg.radii.back() * 2.0);
    }
    if (!opts.sup_box_spec.empty())
        cfg.sup_region = make_box(opts.sup_box_spec, sys.dim(), opts.grid, "--sup-box");
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw usage(e.what());
    }

    PhaseTimings phases;
    StabilityVerdict result = verdict(sys, box, cfg, &phases);

    if (!opts.expected.empty()) {
        // compare the derived equilibrium set against the caller's expectation
        constexpr double kMatchTol = 1e-3;
        std::vector<std::vector<double>> expected;
        for (const auto& spec : opts.expected)
            expected.push_back(parse_point(spec, sys.dim(), "--expect"));

        const auto matches = [&](const std::vector<double>& a, const std::vector<double>& b) {
            return vec_dist(a, b) <= kMatchTol;
        };
        bool mismatch = expected.size() != result.equilibria.size();
        for (const auto& e : expected) {
            bool hit = false;
            for (const auto& eq : result.equilibria) hit = hit || matches(e, eq.point);
            mismatch = mismatch || !hit;
        }
        if (mismatch) {
            std::string note = "equilibrium set mismatch: expected " +
                               std::to_string(expected.size()) + " point(s)";
            for (const auto& e : expected) note += " " + format_point(e);
            note += ", found " + std::to_string(result.equilibria.size());
            for (const auto& eq : result.equilibria) note += " " + format_point(eq.point);
            result.notes.push_back(std::move(note));
        }
    }

    ReportTimings timings;
    if (!common.deterministic) {
        timings.parse = t_parsed - t_start;
        timings.equilibria = phases.equilibria_ms;
        timings.condition1 = phases.condition1_ms;
        timings.condition2 = phases.condition2_ms;
        timings.simplified = phases.simplified_ms;
        timings.total = now_ms() - t_start;
    }

    const std::string text =
        analysis_report_json(sys, source_digest(source), result, box, timings);
    if (common.out.empty())
        std::cout << text;
    else
        write_file_atomic(common.out, text);

    switch (result.verdict) {
        case Verdict::GloballyStablePerCriterion: return 0;
        case Verdict::LocallyStableOnly: return 1;
        case Verdict::UnstablePerCriterion: return 2;
        case Verdict::Inconclusive: return 3;
    }
    return kExitInternal;
}

// --------------------------------------------------------------------------
// portrait

struct PortraitOpts {
    std::string window_spec = "-4:4,-4:4";
    std::string grid_spec = "20x20";
    std::size_t seeds = 0;
    double t_end = 40.0;
    std::string axes_spec;
    bool svg = false;  // drawability is asserted anyway; kept as an explicit request
};

int run_portrait(const CommonOpts& common, const PortraitOpts& opts) {
    SystemDef sys = load_system(common);
    const std::size_t n = sys.dim();
    if (n < 2)
        throw usage("portrait needs a two-dimensional slice; '" + sys.name() +
                    "' has a single state variable");

    std::size_t ax0 = 0, ax1 = 1;
    if (!opts.axes_spec.empty()) {
        const auto names = split(opts.axes_spec, ',');
        if (names.size() != 2 || names[0] == names[1])
            throw usage("--axes expects two distinct state names, got '" + opts.axes_spec + "'");
        const auto& states = sys.states();
        const auto index_of = [&](const std::string& name) -> std::size_t {
            for (std::size_t i = 0; i < states.size(); ++i)
                if (states[i] == name) return i;
            throw usage("--axes: '" + name + "' is not a state of " + sys.name());
        };
        ax0 = index_of(names[0]);
        ax1 = index_of(names[1]);
    } else if (n != 2) {
        throw usage("system has " + std::to_string(n) +
                    " state variables; choose a slice with --axes NAME,NAME");
    }

    const auto window = parse_ranges(opts.window_spec, "--window");
    if (window.size() != 2) throw usage("--window expects exactly two LO:HI pairs");
    for (const auto& [lo, hi] : window)
        if (!(lo < hi)) throw usage("--window bounds must satisfy LO < HI");
    const auto counts = parse_counts(opts.grid_spec, "--grid");
    if (counts.size() != 2) throw usage("--grid expects AxB");

    // vector field on the slice; off-slice coordinates stay at zero
    std::vector<FieldSample> field;
    field.reserve(counts[0] * counts[1]);
    std::vector<double> state(n, 0.0);
    const auto coord = [](const std::pair<double, double>& range, std::size_t i,
                          std::size_t count) {
        if (count == 1) return range.first;
        return range.first + static_cast<double>(i) * (range.second - range.first) /
                                 static_cast<double>(count - 1);
    };
    for (std::size_t iy = 0; iy < counts[1]; ++iy) {
        for (std::size_t ix = 0; ix < counts[0]; ++ix) {
            const double x = coord(window[0], ix, counts[0]);
            const double y = coord(window[1], iy, counts[1]);
            state.assign(n, 0.0);
            state[ax0] = x;
            state[ax1] = y;
            FieldSample sample{x, y, 0.0, 0.0};
            try {
                const auto f = sys.eval_rhs(state);
                sample.dx = f[ax0];
                sample.dy = f[ax1];
            } catch (const EvalError&) {
                sample.dx = sample.dy = std::numeric_limits<double>::quiet_NaN();
            }
            field.push_back(sample);
        }
    }

    // optional sampled trajectories, started uniformly inside the window
    std::vector<Trajectory> trajectories;
    std::mt19937_64 gen(common.seed);
    const auto uniform = [&](double lo, double hi) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    };
    IntegrateOptions iopt;
    iopt.t_end = opts.t_end;
    iopt.tol = 1e-8;
    for (std::size_t s = 0; s < opts.seeds; ++s) {
        std::vector<double> ic(n, 0.0);
        ic[ax0] = uniform(window[0].first, window[0].second);
        ic[ax1] = uniform(window[1].first, window[1].second);
        try {
            trajectories.push_back(integrate(sys, ic, iopt));
        } catch (const Error& e) {
            std::cerr << "trajectory " << s << " from " << format_point(ic)
                      << " dropped: " << e.what() << "\n";
        }
    }

    PortraitScene scene;
    scene.x_lo = window[0].first;
    scene.x_hi = window[0].second;
    scene.y_lo = window[1].first;
    scene.y_hi = window[1].second;
    scene.x_label = sys.states()[ax0];
    scene.y_label = sys.states()[ax1];
    scene.field = field;
    for (const auto& traj : trajectories) {
        std::vector<std::array<double, 2>> line;
        line.reserve(traj.states.size());
        for (const auto& p : traj.states) line.push_back({p[ax0], p[ax1]});
        scene.trajectories.push_back(std::move(line));
    }
    if (n == 2) {
        // equilibrium markers only make sense when the slice is the full space
        SearchBox box;
        box.lower = {window[0].first, window[1].first};
        box.upper = {window[0].second, window[1].second};
        box.grid_per_axis = 5;
        try {
            for (const auto& eq : find_equilibria(sys, box))
                scene.equilibria.push_back({eq.point[0], eq.point[1]});
        } catch (const Error&) {
            // a failed marker search never blocks the portrait
        }
    }

    const std::string base = common.out.empty() ? sys.name() : common.out;
    write_file_atomic(base + ".field.csv", field_csv(field));
    write_file_atomic(base + ".traj.csv", trajectories_csv(trajectories, n));
    write_file_atomic(base + ".svg", portrait_svg(scene));
    std::cout << "wrote " << base << ".field.csv (" << field.size() << " field rows), " << base
              << ".traj.csv (" << trajectories.size() << " trajectories), " << base << ".svg\n";
    return 0;
}

// --------------------------------------------------------------------------
// simulate

struct SimulateOpts {
    std::vector<std::string> ics;
    std::string grid_spec;
    std::string window_spec;
    double t_end = 100.0;
    std::string method = "rkf45-adaptive";
    double tol = 1e-8;
    double step = 1e-3;
    std::string box_spec;
};

int run_simulate(const CommonOpts& common, const SimulateOpts& opts) {
    SystemDef sys = load_system(common);
    const std::size_t n = sys.dim();

    const bool grid_mode = !opts.grid_spec.empty() || !opts.window_spec.empty();
    if (grid_mode && !opts.ics.empty())
        throw usage("choose either explicit --ic starts or a --grid/--window scan");
    if (!grid_mode && opts.ics.empty())
        throw usage("nothing to simulate: give --ic V1,V2,... or --grid AxB with --window");

    std::vector<std::vector<double>> starts;
    if (grid_mode) {
        if (opts.grid_spec.empty() || opts.window_spec.empty())
            throw usage("grid scans need both --grid and --window");
        const auto ranges = parse_ranges(opts.window_spec, "--window");
        const auto counts = parse_counts(opts.grid_spec, "--grid");
        if (ranges.size() != n || counts.size() != n)
            throw usage("--window and --grid must cover all " + std::to_string(n) + " states");
        GridSpec grid;
        for (std::size_t a = 0; a < n; ++a) {
            grid.lower.push_back(ranges[a].first);
            grid.upper.push_back(ranges[a].second);
        }
        grid.counts = counts;
        try {
            validate_grid(grid, n);
        } catch (const Error& e) {
            throw usage(e.what());
        }
        for (std::size_t i = 0; i < grid.total(); ++i) starts.push_back(grid.node(i));
    } else {
        for (const auto& spec : opts.ics) starts.push_back(parse_point(spec, n, "--ic"));
    }

    if (!(opts.t_end > 0.0)) throw usage("--t-end must be positive");
    if (!(opts.tol > 0.0)) throw usage("--tol must be positive");
    if (!(opts.step > 0.0)) throw usage("--step must be positive");

    const SearchBox box = make_box(opts.box_spec, n, 5, "--box");
    const auto equilibria = find_equilibria(sys, box);

    IntegrateOptions iopt;
    iopt.t_end = opts.t_end;
    iopt.method = method_from_string(opts.method);
    iopt.tol = opts.tol;
    iopt.fixed_step = opts.step;
    const bool export_trajs = !common.out.empty();
    iopt.record_stride = export_trajs && !grid_mode ? 1 : 0;

    std::vector<Fate> fates;
    std::vector<Trajectory> trajectories;
    for (const auto& start : starts) {
        try {
            Trajectory traj = integrate(sys, start, iopt);
            fates.push_back(classify_fate(traj, equilibria));
            if (export_trajs) trajectories.push_back(std::move(traj));
        } catch (const Error& e) {
            Fate fate;
            fate.kind = Fate::Kind::Undetermined;
            fate.final_state = start;
            fate.note = e.what();
            fates.push_back(std::move(fate));
        }
    }

    std::size_t width = 5;
    for (const auto& start : starts) width = std::max(width, format_point(start).size());
    std::cout << std::left << std::setw(static_cast<int>(width + 2)) << "start"
              << std::setw(14) << "fate" << "detail\n";
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const Fate& fate = fates[i];
        std::string detail;
        switch (fate.kind) {
            case Fate::Kind::Converged:
                detail = "equilibrium #" + std::to_string(fate.equilibrium_index) +
                         ", distance " + format_double(fate.final_distance);
                break;
            case Fate::Kind::Diverged:
                detail = "norm " + format_double(fate.exit_norm) + " at t = " +
                         format_double(fate.exit_time);
                break;
            case Fate::Kind::Undetermined:
                detail = fate.note.empty() ? "final state " + format_point(fate.final_state)
                                           : fate.note;
                break;
        }
        std::cout << std::setw(static_cast<int>(width + 2)) << format_point(starts[i])
                  << std::setw(14) << to_string(fate.kind) << detail << "\n";
    }

    std::size_t converged = 0, diverged = 0, undetermined = 0;
    for (const auto& fate : fates) {
        if (fate.kind == Fate::Kind::Converged) ++converged;
        else if (fate.kind == Fate::Kind::Diverged) ++diverged;
        else ++undetermined;
    }
    std::cout << converged << " converged, " << diverged << " diverged, " << undetermined
              << " undetermined\n";

    if (export_trajs) write_file_atomic(common.out, trajectories_csv(trajectories, n));
    return 0;
}

// --------------------------------------------------------------------------
// equilibria

struct EquilibriaOpts {
    std::string box_spec;
    std::size_t grid = 5;
};

int run_equilibria(const CommonOpts& common, const EquilibriaOpts& opts) {
    SystemDef sys = load_system(common);
    const SearchBox box = make_box(opts.box_spec, sys.dim(), opts.grid, "--box");
    const auto equilibria = find_equilibria(sys, box);

    std::ostringstream out;
    if (equilibria.empty()) {
        out << "no equilibria found in the box\n";
    } else {
        for (const auto& eq : equilibria) {
            out << format_point(eq.point) << "  residual " << format_double(eq.residual_norm)
                << "  " << to_string(eq.local_class) << "  eigenvalues [";
            for (std::size_t i = 0; i < eq.eigen.values.size(); ++i) {
                if (i > 0) out << ", ";
                out << format_complex(eq.eigen.values[i]);
            }
            out << "]\n";
        }
    }
    if (common.out.empty())
        std::cout << out.str();
    else
        write_file_atomic(common.out, out.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"global-stability analysis for autonomous ODE systems"};
    app.require_subcommand(1);

    CommonOpts analyze_common, portrait_common, simulate_common, equilibria_common;
    AnalyzeOpts analyze_opts;
    PortraitOpts portrait_opts;
    SimulateOpts simulate_opts;
    EquilibriaOpts equilibria_opts;

    CLI::App* analyze = app.add_subcommand(
        "analyze", "evaluate the stability criterion and write a JSON report");
    add_common(analyze, analyze_common);
    analyze->add_option("--epsilon", analyze_opts.epsilon,
                        "bound the directional samples must stay within");
    analyze->add_option("--hessian-mode", analyze_opts.hessian_mode, "second-derivative layout")
        ->check(CLI::IsMember({"tensor", "paper-row"}));
    analyze->add_option("--directions", analyze_opts.directions, "radial direction family")
        ->check(CLI::IsMember({"positive-orthant", "sphere"}));
    analyze->add_option("--direction-count", analyze_opts.direction_count,
                        "number of radial directions (>= 8)");
    analyze->add_option("--box", analyze_opts.box_spec,
                        "equilibrium search box LO:HI,... (default -5:5 per axis)");
    analyze->add_option("--grid", analyze_opts.grid, "search grid nodes per axis");
    analyze->add_option("--r-max", analyze_opts.r_max,
                        "largest sampling radius; the schedule doubles from 1");
    analyze->add_option("--sup-box", analyze_opts.sup_box_spec,
                        "region for the field-supremum scan (default: the search box)");
    analyze->add_option("--expect", analyze_opts.expected,
                        "expected equilibrium V1,V2,... (repeatable); a mismatch is noted "
                        "in the report");

    CLI::App* portrait = app.add_subcommand(
        "portrait", "sample the vector field and trajectories, write CSV + SVG");
    add_common(portrait, portrait_common);
    portrait->add_option("--window", portrait_opts.window_spec, "plot window LO:HI,LO:HI");
    portrait->add_option("--grid", portrait_opts.grid_spec, "field sample grid AxB");
    portrait->add_option("--seeds", portrait_opts.seeds, "number of random trajectory starts");
    portrait->add_option("--t-end", portrait_opts.t_end, "trajectory horizon");
    portrait->add_option("--axes", portrait_opts.axes_spec,
                         "two state names spanning the plotted slice (required when n > 2)");
    portrait->add_flag("--svg", portrait_opts.svg, "insist on the SVG rendering");

    CLI::App* simulate = app.add_subcommand(
        "simulate", "integrate initial conditions and print their fates");
    add_common(simulate, simulate_common);
    simulate->add_option("--ic", simulate_opts.ics, "initial condition V1,V2,... (repeatable)");
    simulate->add_option("--grid", simulate_opts.grid_spec, "grid of starts AxB[xC...]");
    simulate->add_option("--window", simulate_opts.window_spec, "grid window LO:HI per axis");
    simulate->add_option("--t-end", simulate_opts.t_end, "integration horizon");
    simulate->add_option("--method", simulate_opts.method, "integration method")
        ->check(CLI::IsMember({"rk4-fixed", "rkf45-adaptive"}));
    simulate->add_option("--tol", simulate_opts.tol, "adaptive local error tolerance");
    simulate->add_option("--step", simulate_opts.step, "fixed step for rk4-fixed");
    simulate->add_option("--box", simulate_opts.box_spec,
                         "equilibrium search box for fate classification");

    CLI::App* equilibria_cmd =
        app.add_subcommand("equilibria", "list the equilibria inside a search box");
    add_common(equilibria_cmd, equilibria_common);
    equilibria_cmd->add_option("--box", equilibria_opts.box_spec, "search box LO:HI per axis");
    equilibria_cmd->add_option("--grid", equilibria_opts.grid, "search grid nodes per axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {  // --help and friends
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (analyze->parsed()) return run_analyze(analyze_common, analyze_opts);
        if (portrait->parsed()) return run_portrait(portrait_common, portrait_opts);
        if (simulate->parsed()) return run_simulate(simulate_common, simulate_opts);
        if (equilibria_cmd->parsed()) return run_equilibria(equilibria_common, equilibria_opts);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const odestab::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}

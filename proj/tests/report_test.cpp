#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include <json.hpp>

#include "odestab/criteria.hpp"
#include "odestab/integrate.hpp"
#include "odestab/report.hpp"
#include "odestab/system.hpp"

using namespace odestab;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

SystemDef oscillator() {
    return parse_system(
        "system fhn\n"
        "param I = 0\n"
        "param a = 0\n"
        "param b = 0.333\n"
        "param c = 1\n"
        "param tau = 1\n"
        "state v, w\n"
        "dv/dt = c*(v - v^3/3 - w + I - c*(v - a))\n"
        "dw/dt = (v + a - b*w)/tau\n");
}

SystemDef neg_damp(double mu) {
    return parse_system(
               "system vdp\n"
               "param mu = -0.1\n"
               "state v, u\n"
               "dv/dt = u\n"
               "du/dt = mu*(1 - v^2)*u - v\n")
        .with_param("mu", mu);
}

SearchBox square_box(double lo, double hi, std::size_t grid) {
    return SearchBox{{lo, lo}, {hi, hi}, grid};
}

std::string report_for(const SystemDef& sys, const SearchBox& box) {
    CriterionConfig cfg;
    const auto result = verdict(sys, box, cfg);
    return analysis_report_json(sys, source_digest(print_system(sys)), result, box,
                                ReportTimings{});
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

const std::set<std::string> kTopLevelKeys = {
    "version",    "system",  "config",     "equilibria", "condition1",
    "condition2", "simplified", "verdict", "notes",      "timings_ms"};

std::set<std::string> keys_of(const json& j) {
    std::set<std::string> out;
    for (const auto& item : j.items()) out.insert(item.key());
    return out;
}

}  // namespace

TEST_CASE("source digest: known vectors, stability, spread") {
    // FNV-1a 64-bit reference values
    CHECK(source_digest("") == "cbf29ce484222325");
    CHECK(source_digest("a") == "af63dc4c8601ec8c");
    CHECK(source_digest("hello") == "a430d84680aabd0b");

    const auto sys = oscillator();
    const auto d1 = source_digest(print_system(sys));
    const auto d2 = source_digest(print_system(sys));
    CHECK(d1 == d2);
    CHECK(d1.size() == 16);
    CHECK(d1 != source_digest(print_system(neg_damp(-0.1))));
}

TEST_CASE("analysis report carries the full schema") {
    const auto sys = oscillator();
    const auto box = square_box(-5.0, 5.0, 9);
    CriterionConfig cfg;
    const auto result = verdict(sys, box, cfg);
    REQUIRE(result.verdict == Verdict::GloballyStablePerCriterion);

    ReportTimings timings;
    timings.parse = 1.5;
    timings.total = 20.0;
    const auto text =
        analysis_report_json(sys, source_digest(print_system(sys)), result, box, timings);
    const json j = json::parse(text);

    CHECK(keys_of(j) == kTopLevelKeys);
    CHECK(j["version"] == "0.1.0");
    CHECK(j["system"]["name"] == "fhn");
    CHECK(j["system"]["digest"].get<std::string>().size() == 16);

    CHECK(j["config"]["epsilon"] == 1e-6);
    CHECK(j["config"]["hessian_mode"] == "tensor");
    CHECK(j["config"]["direction_set"] == "positive-orthant");
    CHECK(j["config"]["box"]["grid_per_axis"] == 9);
    CHECK(j["config"]["sup_region"]["lower"] == json::array({-5.0, -5.0}));

    REQUIRE(j["equilibria"].size() == 1);
    const auto& eq = j["equilibria"][0];
    CHECK(keys_of(eq) == std::set<std::string>{"point", "residual", "eigenvalues", "class"});
    CHECK(std::abs(eq["point"][0].get<double>()) < 1e-12);
    CHECK(eq["residual"].get<double>() < 1e-10);
    REQUIRE(eq["eigenvalues"].size() == 2);
    CHECK(eq["eigenvalues"][0]["re"].get<double>() == doctest::Approx(-0.1665));
    CHECK(eq["class"] == "stable-focus");

    CHECK(keys_of(j["condition1"]) ==
          std::set<std::string>{"holds", "spectral_abscissa_per_equilibrium"});
    CHECK(j["condition1"]["holds"] == true);
    CHECK(j["condition1"]["spectral_abscissa_per_equilibrium"].size() == 1);

    CHECK(keys_of(j["condition2"]) == std::set<std::string>{"satisfied", "epsilon", "radii",
                                                            "s_max_per_radius", "worst_direction"});
    CHECK(j["condition2"]["satisfied"] == true);
    CHECK(j["condition2"]["radii"].size() == j["condition2"]["s_max_per_radius"].size());
    CHECK(j["condition2"]["worst_direction"].size() == 2);

    CHECK(keys_of(j["simplified"]) == std::set<std::string>{"sup", "region"});
    CHECK(j["verdict"] == "globally-stable-per-criterion");
    CHECK(j["notes"].is_array());
    CHECK(j["timings_ms"]["parse"] == 1.5);
    CHECK(j["timings_ms"]["total"] == 20.0);
}

TEST_CASE("report serialization is lossless and order-stable") {
    const auto sys = oscillator();
    const auto text = report_for(sys, square_box(-5.0, 5.0, 9));
    // reparse with order preserved, re-emit, compare bytes
    const auto round = ordered_json::parse(text).dump(2) + "\n";
    CHECK(round == text);
    CHECK(text == report_for(sys, square_box(-5.0, 5.0, 9)));
}

TEST_CASE("every verdict branch serializes against the schema") {
    struct Case {
        std::string expected;
        std::string text;
    };
    std::vector<Case> cases;
    cases.push_back({"globally-stable-per-criterion",
                     report_for(oscillator(), square_box(-5.0, 5.0, 9))});
    cases.push_back({"locally-stable-only", report_for(neg_damp(-0.1), square_box(-5.0, 5.0, 9))});
    cases.push_back({"unstable-per-criterion", report_for(neg_damp(2.0), square_box(-5.0, 5.0, 9))});
    // no real roots of x^2 + 1: nothing to anchor the criterion to
    cases.push_back({"inconclusive",
                     report_for(parse_system("system bare\nstate x\ndx/dt = x^2 + 1\n"),
                                SearchBox{{-2.0}, {2.0}, 5})});

    for (const auto& c : cases) {
        const json j = json::parse(c.text);
        CHECK(keys_of(j) == kTopLevelKeys);
        CHECK(j["verdict"] == c.expected);
        if (c.expected == "inconclusive") {
            CHECK(j["equilibria"].empty());
            REQUIRE(j["notes"].size() == 1);
            CHECK(j["notes"][0].get<std::string>().find("no equilibria") != std::string::npos);
        }
    }
}

TEST_CASE("csv numbers reparse to the doubles that produced them") {
    std::mt19937_64 gen(20260823);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-300, 300);
    for (int i = 0; i < 200; ++i) {
        const double v = std::ldexp(mant(gen), expo(gen));
        const std::string s = csv_number(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(std::strtod(csv_number(0.1).c_str(), nullptr) == 0.1);
    CHECK(std::strtod(csv_number(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
    const double neg_zero = -0.0;
    CHECK(std::signbit(std::strtod(csv_number(neg_zero).c_str(), nullptr)));
}

TEST_CASE("field csv: header, row count, LF endings") {
    std::vector<FieldSample> samples{{0.0, 0.0, 1.0, -2.0}, {0.5, -0.5, 0.25, 1.0 / 3.0}};
    const auto text = field_csv(samples);
    CHECK(text.substr(0, 11) == "x,y,dx,dy\n0");
    CHECK(text.find('\r') == std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find(csv_number(1.0 / 3.0)) != std::string::npos);
}

TEST_CASE("trajectory csv: ids, header width, every recorded row") {
    const auto sys = parse_system("system decay\nstate x\ndx/dt = -x\n");
    IntegrateOptions opt;
    opt.method = Method::Rk4Fixed;
    opt.t_end = 0.01;  // ten steps
    opt.record_stride = 1;
    const std::vector<double> a{1.0}, b{2.0};
    std::vector<Trajectory> trajs{integrate(sys, a, opt), integrate(sys, b, opt)};

    const auto text = trajectories_csv(trajs, 1);
    CHECK(text.substr(0, 12) == "traj_id,t,x1");
    const auto rows = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    CHECK(rows == 1 + trajs[0].times.size() + trajs[1].times.size());
    CHECK(text.find("\n0,0,1\n") != std::string::npos);
    CHECK(text.find("\n1,0,2\n") != std::string::npos);
    CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("atomic writes land whole or not at all") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "odestab_report_test";
    fs::remove_all(dir);

    const fs::path target = dir / "nested" / "report.json";
    write_file_atomic(target, "first version, long enough to notice truncation\n");
    CHECK(read_file(target) == "first version, long enough to notice truncation\n");

    write_file_atomic(target, "second\n");
    CHECK(read_file(target) == "second\n");

    // no temp litter next to the target
    std::size_t entries = 0;
    for (const auto& entry : fs::directory_iterator(target.parent_path())) {
        (void)entry;
        ++entries;
    }
    CHECK(entries == 1);
    fs::remove_all(dir);
}

TEST_CASE("portrait svg: structure, clipping, determinism") {
    PortraitScene scene;
    scene.x_lo = -2.0;
    scene.x_hi = 2.0;
    scene.y_lo = -2.0;
    scene.y_hi = 2.0;
    scene.x_label = "v";
    scene.y_label = "w";
    scene.field = {{-1.0, -1.0, 1.0, 0.0},
                   {1.0, -1.0, 0.0, 2.0},
                   {-1.0, 1.0, -0.5, 0.5},
                   {1.0, 1.0, 0.0, 0.0}};  // the last one renders as a dot
    scene.trajectories = {{{0.0, 0.0}, {0.5, 0.25}, {1.0, 1.0}}};
    scene.equilibria = {{0.0, 0.0}};

    const auto svg = portrait_svg(scene);
    CHECK(svg.substr(0, 4) == "<svg");
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("clip-path=\"url(#plot)\"") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);

    std::size_t arrows = 0, circles = 0;
    for (std::size_t pos = 0; (pos = svg.find("<line", pos)) != std::string::npos; ++pos) ++arrows;
    for (std::size_t pos = 0; (pos = svg.find("<circle", pos)) != std::string::npos; ++pos)
        ++circles;
    CHECK(arrows == 3);   // three nonzero field vectors
    CHECK(circles == 2);  // one zero-field dot, one equilibrium marker

    CHECK(svg == portrait_svg(scene));

    // a single huge vector must not flatten the field scale
    PortraitScene outlier = scene;
    outlier.field.push_back({0.0, 0.0, 1e9, 0.0});
    CHECK(portrait_svg(outlier).find("nan") == std::string::npos);
}

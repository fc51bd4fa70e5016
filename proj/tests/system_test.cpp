#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "odestab/error.hpp"
#include "odestab/system.hpp"

using namespace odestab;

namespace {

const char* kOscillator =
    "# cubic relaxation oscillator\n"
    "system fhn\n"
    "param I = 0\n"
    "param a = 0\n"
    "param b = 0.333\n"
    "param c = 1\n"
    "param tau = 1\n"
    "state v, w\n"
    "dv/dt = c*(v - v^3/3 - w + I - c*(v - a))\n"
    "dw/dt = (v + a - b*w)/tau\n";

const char* kNegDamp =
    "system vdp\n"
    "param mu = -0.1\n"
    "state v, u\n"
    "dv/dt = u\n"
    "du/dt = mu*(1 - v^2)*u - v\n";

}  // namespace

TEST_CASE("a full system definition parses and evaluates") {
    SystemDef sys = parse_system(kOscillator);
    CHECK(sys.name() == "fhn");
    CHECK(sys.dim() == 2);
    CHECK(sys.states() == std::vector<std::string>{"v", "w"});
    CHECK(sys.param("b") == doctest::Approx(0.333));

    double x[2] = {0.5, -0.25};
    std::vector<double> f = sys.eval_rhs(x);
    // v' = v - v^3/3 - w - v = -v^3/3 - w once c=1, I=0, a=0
    CHECK(f[0] == doctest::Approx(-0.125 / 3.0 + 0.25));
    CHECK(f[1] == doctest::Approx(0.5 - 0.333 * -0.25));
    CHECK(sys.rhs_norm(x) == doctest::Approx(std::hypot(f[0], f[1])));
}

TEST_CASE("parameter overrides make a new definition") {
    SystemDef sys = parse_system(kNegDamp);
    SystemDef hot = sys.with_param("mu", 2.0);
    CHECK(sys.param("mu") == doctest::Approx(-0.1));
    CHECK(hot.param("mu") == doctest::Approx(2.0));

    double x[2] = {0.5, 1.0};
    CHECK(sys.eval_rhs(x)[1] == doctest::Approx(-0.1 * 0.75 * 1.0 - 0.5));
    CHECK(hot.eval_rhs(x)[1] == doctest::Approx(2.0 * 0.75 * 1.0 - 0.5));

    CHECK(!sys.has_param("nope"));
    CHECK_THROWS_AS(sys.param("nope"), Error);
    CHECK_THROWS_AS(sys.with_param("nope", 1.0), Error);
}

TEST_CASE("jacobian entries match hand derivatives") {
    SystemDef sys = parse_system(kNegDamp);
    SymMatrix j = jacobian_sym(sys);
    REQUIRE(j.rows() == 2);
    REQUIRE(j.cols() == 2);

    double x[2] = {0.7, -0.3};
    std::vector<double> vals = j.eval_at(x, sys.param_values());
    double mu = -0.1;
    CHECK(vals[0] == doctest::Approx(0.0));
    CHECK(vals[1] == doctest::Approx(1.0));
    CHECK(vals[2] == doctest::Approx(-2.0 * mu * 0.7 * -0.3 - 1.0));  // d/dv of mu(1-v^2)u - v
    CHECK(vals[3] == doctest::Approx(mu * (1.0 - 0.49)));
}

TEST_CASE("tensor hessians are symmetric and match hand values") {
    SystemDef sys = parse_system(kOscillator);
    HessianBundle h = hessian_sym(sys, HessianMode::Tensor);
    REQUIRE(h.matrices.size() == 2);

    double x[2] = {1.3, 0.4};
    std::vector<double> h0 = h.matrices[0].eval_at(x, sys.param_values());
    std::vector<double> h1 = h.matrices[1].eval_at(x, sys.param_values());
    // first component is cubic in v: d2/dv2 = -2v (with c=1), everything else 0
    CHECK(h0[0] == doctest::Approx(-2.0 * 1.3));
    CHECK(h0[1] == doctest::Approx(0.0));
    CHECK(h0[2] == doctest::Approx(0.0));
    CHECK(h0[3] == doctest::Approx(0.0));
    // second component is linear: hessian vanishes
    for (double v : h1) CHECK(v == doctest::Approx(0.0));

    // mixed partials commute
    CHECK(std::abs(h0[1] - h0[2]) <= 1e-12);
}

TEST_CASE("row-mode hessian picks the diagonal first derivative") {
    SystemDef sys = parse_system(kNegDamp);
    HessianBundle h = hessian_sym(sys, HessianMode::PaperRow);
    REQUIRE(h.matrices.size() == 1);
    CHECK(h.mode == HessianMode::PaperRow);

    double x[2] = {0.9, 1.1};
    std::vector<double> m = h.matrices[0].eval_at(x, sys.param_values());
    double mu = -0.1;
    // row 0: d/dv and d/du of df0/dv = 0
    CHECK(m[0] == doctest::Approx(0.0));
    CHECK(m[1] == doctest::Approx(0.0));
    // row 1: d/dv and d/du of df1/du = mu(1 - v^2)
    CHECK(m[2] == doctest::Approx(-2.0 * mu * 0.9));
    CHECK(m[3] == doctest::Approx(0.0));
}

TEST_CASE("printing a system and reparsing preserves behavior") {
    SystemDef sys = parse_system(kOscillator);
    SystemDef back = parse_system(print_system(sys));
    CHECK(back.name() == sys.name());
    CHECK(back.states() == sys.states());
    CHECK(back.params() == sys.params());
    double x[2] = {0.37, -1.2};
    std::vector<double> f1 = sys.eval_rhs(x);
    std::vector<double> f2 = back.eval_rhs(x);
    CHECK(f1[0] == doctest::Approx(f2[0]).epsilon(1e-15));
    CHECK(f1[1] == doctest::Approx(f2[1]).epsilon(1e-15));
}

TEST_CASE("parse failures carry line and column") {
    // undeclared identifier in an equation body
    try {
        parse_system("system s\nstate x\ndx/dt = x + q\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("undeclared identifier 'q'") != std::string::npos);
    }

    // stray character inside an expression
    try {
        parse_system("system s\nstate x\ndx/dt = x $ 2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.col == 11);
    }
}

TEST_CASE("malformed declarations are rejected") {
    CHECK_THROWS_AS(parse_system("state x\ndx/dt = x\n"), ParseError);          // no system
    CHECK_THROWS_AS(parse_system("system s\ndx/dt = x\n"), ParseError);         // no states
    CHECK_THROWS_AS(parse_system("system s\nstate x\n"), ParseError);           // no equations
    CHECK_THROWS_AS(parse_system("system s\nstate x, x\ndx/dt = x\n"), ParseError);
    CHECK_THROWS_AS(parse_system("system s\nparam k = 1\nparam k = 2\nstate x\ndx/dt = x\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_system("system s\nparam x = 1\nstate x\ndx/dt = x\n"), ParseError);
    CHECK_THROWS_AS(parse_system("system s\nstate x, y\ndx/dt = x\n"), ParseError);  // count
    CHECK_THROWS_AS(parse_system("system s\nstate x\ndy/dt = x\n"), ParseError);     // unknown lhs
    CHECK_THROWS_AS(parse_system("system s\nstate x\ndx/dt = x\ndx/dt = x\n"), ParseError);
    CHECK_THROWS_AS(parse_system("system s\nstate sin\ndsin/dt = 1\n"), ParseError);  // reserved
    CHECK_THROWS_AS(parse_system("system s\nparam k\nstate x\ndx/dt = x\n"), ParseError);
}

TEST_CASE("comments, blank lines and signed parameters parse") {
    SystemDef sys = parse_system(
        "# leading comment\n"
        "system s\n"
        "\n"
        "param k = -2.5e-1   # trailing comment\n"
        "state x\n"
        "dx/dt = k*x  # decay\n");
    CHECK(sys.param("k") == doctest::Approx(-0.25));
    double x[1] = {4.0};
    CHECK(sys.eval_rhs(x)[0] == doctest::Approx(-1.0));
}

#include <doctest.h>

#include <cmath>
#include <string>

#include "gridstrength/network.hpp"

using namespace gs;

namespace {

const char* kTwoBus = R"({
  "name": "two-bus",
  "base": {"mva": 100, "f0": 60},
  "buses": [
    {"id": 1, "type": "slack", "v_set": 1.0},
    {"id": 2, "type": "pq"}
  ],
  "branches": [{"from": 1, "to": 2, "r": 0.0, "x": 0.1, "b": 0.04}],
  "devices": []
})";

std::string two_bus_with(const std::string& branch, const std::string& devices = "[]") {
    return std::string(R"({
  "base": {},
  "buses": [
    {"id": 1, "type": "slack", "v_set": 1.0},
    {"id": 2, "type": "pq"}
  ],
  "branches": [)") + branch + R"(],
  "devices": )" + devices + "}";
}

double block_diff(const Mat2& a, Complex want) {
    const Mat2 w = mat2_of_complex(want);
    return std::max({std::abs(a.m11 - w.m11), std::abs(a.m12 - w.m12),
                     std::abs(a.m21 - w.m21), std::abs(a.m22 - w.m22)});
}

}  // namespace

TEST_CASE("series reactance lands in the off-diagonal admittance blocks") {
    const SystemCase c = parse_case(two_bus_with(R"({"from":1,"to":2,"x":0.1})"));
    const BlockMatrix y = build_admittance(c);
    // y_series = 1/(j 0.1) = -j10; the coupling block carries its negative
    CHECK(block_diff(y.block(0, 1), {0.0, 10.0}) < 1e-12);
    CHECK(block_diff(y.block(1, 0), {0.0, 10.0}) < 1e-12);
    CHECK(block_diff(y.block(0, 0), {0.0, -10.0}) < 1e-12);
    CHECK(y.complex_representable(1e-12));
}

TEST_CASE("charging susceptance adds +j b/2 on each end") {
    const SystemCase c = parse_case(kTwoBus);
    const BlockMatrix y = build_admittance(c);
    CHECK(block_diff(y.block(0, 0), Complex(0.0, -10.0 + 0.02)) < 1e-12);
    CHECK(block_diff(y.block(1, 1), Complex(0.0, -10.0 + 0.02)) < 1e-12);
    CHECK(block_diff(y.block(0, 1), {0.0, 10.0}) < 1e-12);
}

TEST_CASE("charging-free rows sum to zero") {
    const SystemCase c = parse_case(two_bus_with(R"({"from":1,"to":2,"r":0.03,"x":0.1})"));
    const BlockMatrix y = build_admittance(c);
    for (int i = 0; i < c.n(); ++i) {
        Mat2 row{};
        for (int j = 0; j < c.n(); ++j) row = row + y.block(i, j);
        CHECK(block_diff(row, {0.0, 0.0}) < 1e-12);
    }
}

TEST_CASE("impedance inverts the admittance") {
    BlockMatrix y(1);
    y.set_block(0, 0, mat2_of_complex({0.0, -10.0}));
    const BlockMatrix z = impedance(y);
    CHECK(block_diff(z.block(0, 0), {0.0, 0.1}) < 1e-12);
}

TEST_CASE("two-bus impedance matches the hand-computed inverse") {
    const SystemCase c = parse_case(kTwoBus);
    const BlockMatrix z = impedance(build_admittance(c));

    const Complex ys = 1.0 / Complex(0.0, 0.1);
    const Complex yc(0.0, 0.02);
    const Complex diag = ys + yc;
    const Complex det = diag * diag - ys * ys;
    CHECK(block_diff(z.block(0, 0), diag / det) < 1e-10);
    CHECK(block_diff(z.block(0, 1), ys / det) < 1e-10);
    CHECK(block_diff(z.block(1, 0), ys / det) < 1e-10);
    CHECK(block_diff(z.block(1, 1), diag / det) < 1e-10);
}

TEST_CASE("a network with no shunt path to ground is singular") {
    const SystemCase c = parse_case(two_bus_with(R"({"from":1,"to":2,"r":0.01,"x":0.1})"));
    CHECK_THROWS_AS(impedance(build_admittance(c)), SingularNetwork);
}

TEST_CASE("unloaded lossless power flow is flat") {
    const SystemCase c = parse_case(two_bus_with(R"({"from":1,"to":2,"x":0.1})"));
    const PowerFlowSolution pf = solve_powerflow(c);
    CHECK(pf.v[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pf.v[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(pf.theta[0]) < 1e-12);
    CHECK(std::abs(pf.theta[1]) < 1e-12);
    CHECK(pf.mismatch < 1e-10);
}

TEST_CASE("two-bus transfer satisfies the lossless line equation") {
    const SystemCase c = parse_case(two_bus_with(
        R"({"from":1,"to":2,"x":0.1})", R"([{"type":"zload","bus":2,"p":0.5,"q":0.0}])"));
    const PowerFlowSolution pf = solve_powerflow(c);
    REQUIRE(pf.mismatch < 1e-8);
    const double p12 = pf.v[0] * pf.v[1] * std::sin(pf.theta[0] - pf.theta[1]) / 0.1;
    CHECK(p12 == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(pf.theta[0] == 0.0);       // slack holds the reference angle
    CHECK(pf.theta[1] < 0.0);        // power flows toward the load
}

TEST_CASE("39-bus power flow converges fast and balances every bus") {
    const SystemCase c = load_case(std::string(GS_CASE_DIR) + "/ieee39.json");
    REQUIRE(c.n() == 39);
    const PowerFlowSolution pf = solve_powerflow(c);
    CHECK(pf.iterations <= 10);
    CHECK(pf.mismatch < 1e-8);

    // independent balance check: injections recomputed from the raw
    // admittance must match the schedule at PQ buses (and p at PV buses)
    const BlockMatrix y = build_admittance(c);
    for (int k = 0; k < c.n(); ++k) {
        Complex i_net = 0.0;
        for (int j = 0; j < c.n(); ++j)
            i_net += y.block(k, j).to_complex() * pf.voltage(j);
        const Complex s = pf.voltage(k) * std::conj(i_net);
        const Complex sched = c.scheduled_injection(k);
        if (c.buses[k].type == BusType::PQ) {
            CHECK(std::abs(s - sched) < 1e-8);
        } else if (c.buses[k].type == BusType::PV) {
            CHECK(std::abs(s.real() - sched.real()) < 1e-8);
            CHECK(pf.v[k] == doctest::Approx(c.buses[k].v_set).epsilon(1e-12));
        }
    }

    // pinned solution samples
    const int k15 = c.index_of(15);
    CHECK(pf.v[k15] == doctest::Approx(1.0161417549).epsilon(1e-8));
    CHECK(pf.theta[k15] == doctest::Approx(-0.198018427368).epsilon(1e-8));
    const int k31 = c.index_of(31);
    CHECK(pf.s_inj[k31].real() == doctest::Approx(6.68679099022).epsilon(1e-8));
    CHECK(pf.s_inj[k31].imag() == doctest::Approx(2.17062103693).epsilon(1e-8));
}

TEST_CASE("case validation reports the offending JSON path") {
    auto path_of = [](const std::string& text) {
        try {
            parse_case(text);
        } catch (const ParseError& e) {
            return e.path;
        }
        return std::string("no error");
    };

    CHECK(path_of("{") == "");  // invalid JSON reported at the root
    CHECK(path_of(R"({"base":{},"buses":[]})") == "/buses");
    CHECK(path_of(two_bus_with(R"({"from":1,"to":2,"x":0})")) == "/branches/0/x");
    CHECK(path_of(two_bus_with(R"({"from":1,"to":3,"x":0.1})")) == "/branches/0/to");
    CHECK(path_of(two_bus_with(R"({"from":1,"to":2,"x":0.1,"tap":-2})")) == "/branches/0/tap");
    CHECK(path_of(two_bus_with(R"({"from":1,"to":2,"x":0.1})",
                               R"([{"type":"windmill","bus":2}])")) == "/devices/0/type");
    CHECK(path_of(two_bus_with(R"({"from":1,"to":2,"x":0.1})",
                               R"([{"type":"sm2","bus":2,"h":4}])")) == "/devices/0/xd1");
    CHECK(path_of(two_bus_with(R"({"from":1,"to":2,"x":0.1})",
                               R"([{"type":"zload","bus":2}])")) == "/devices/0");

    // duplicate ids and missing slack
    CHECK(path_of(R"({"base":{},"buses":[{"id":1,"type":"slack","v_set":1},{"id":1}],
                      "branches":[]})") == "/buses/1/id");
    CHECK(path_of(R"({"base":{},"buses":[{"id":1},{"id":2}],"branches":[]})") == "/buses");
}

TEST_CASE("scheduled injection nets generation against impedance loads") {
    const SystemCase c = parse_case(two_bus_with(
        R"({"from":1,"to":2,"x":0.1})",
        R"([{"type":"sm2","bus":2,"p":0.8,"h":4,"xd1":0.25},
            {"type":"zload","bus":2,"p":0.5,"q":0.2}])"));
    const Complex s = c.scheduled_injection(c.index_of(2));
    CHECK(s.real() == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(s.imag() == doctest::Approx(-0.2).epsilon(1e-15));
}

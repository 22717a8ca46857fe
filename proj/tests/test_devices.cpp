#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "gridstrength/devices.hpp"
#include "gridstrength/strength.hpp"

using namespace gs;

namespace {

double mat_diff(const Mat2& a, const Mat2& b) {
    return std::max({std::abs(a.m11 - b.m11), std::abs(a.m12 - b.m12),
                     std::abs(a.m21 - b.m21), std::abs(a.m22 - b.m22)});
}

double mat_norm(const Mat2& a) { return mat_diff(a, Mat2{}); }

// single-bus snapshot with a prescribed voltage jump
Snapshot snap_one(int bus, Complex vm, Complex vp) {
    Snapshot s;
    s.bus_ids = {bus};
    s.v_minus = {std::abs(vm)};
    s.v_plus = {std::abs(vp)};
    s.th_minus = {std::arg(vm)};
    s.th_plus = {std::arg(vp)};
    s.eta1_minus = {Complex{}};
    s.eta1_plus = {Complex{}};
    s.eta2_minus = {Complex{}};
    s.eta2_plus = {Complex{}};
    return s;
}

SynMachineState random_machine(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SynMachineState sm;
    sm.bus = 1;
    sm.m = 2.0 * (2.0 + 8.0 * u(rng));
    sm.ra = 0.01 * u(rng);
    sm.xd1 = 0.15 + 0.3 * u(rng);
    sm.omega_b = 2.0 * M_PI * 60.0;
    sm.e1q = 0.9 + 0.3 * u(rng);
    sm.delta = -0.5 + u(rng);
    sm.pm = u(rng);
    sm.omega_r = 0.99 + 0.02 * u(rng);
    return sm;
}

GflState random_gfl(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GflState g;
    g.bus = 1;
    g.t_i = 0.01 + 0.04 * u(rng);
    g.t_f = 0.05 + 0.1 * u(rng);
    g.droop = 0.03 + 0.04 * u(rng);
    g.s_ref0 = Complex(0.2 + u(rng), -0.3 + 0.6 * u(rng));
    g.xp = 0.1 * u(rng);
    g.i = ClarkeVec(Complex(0.3 + u(rng), -0.5 + u(rng)));
    return g;
}

}  // namespace

TEST_CASE("machine at no load initializes with the EMF on the terminal") {
    const SystemCase c = parse_case(R"({
      "base": {},
      "buses": [{"id": 1, "type": "slack", "v_set": 1.0}, {"id": 2}],
      "branches": [{"from": 1, "to": 2, "x": 0.1}],
      "devices": [{"type": "sm2", "bus": 1, "p": 0.0, "h": 4, "xd1": 0.25}]
    })");
    const PowerFlowSolution pf = solve_powerflow(c);
    const std::vector<Device> devs = init_devices(c, pf);
    REQUIRE(devs.size() == 1);
    const auto& sm = std::get<SynMachineState>(devs[0].state);
    CHECK(std::abs(sm.emf() - pf.voltage(0)) < 1e-10);
    CHECK(std::abs(sm.pm) < 1e-10);
    CHECK(sm.omega_r == 1.0);
}

TEST_CASE("impedance load absorbs its scheduled power at the solved voltage") {
    // the load shares the slack bus, so the solved voltage there is exactly
    // the 1.0 set point and the fitted impedance has a closed form
    const SystemCase c = parse_case(R"({
      "base": {},
      "buses": [{"id": 1, "type": "slack", "v_set": 1.0}, {"id": 2}],
      "branches": [{"from": 1, "to": 2, "x": 0.1}],
      "devices": [
        {"type": "sm2", "bus": 1, "p": 0.5, "h": 4, "xd1": 0.25},
        {"type": "zload", "bus": 1, "p": 0.5, "q": 0.1}
      ]
    })");
    const PowerFlowSolution pf = solve_powerflow(c);
    const std::vector<Device> devs = init_devices(c, pf);
    const auto& zl = std::get<ZLoadState>(devs[1].state);
    CHECK(std::abs(zl.z - 1.0 / Complex(0.5, -0.1)) < 1e-10);
    // drawn power at v = 1 equals the schedule
    const Complex i = device_current(devs[1].state, {1.0, 0.0});
    CHECK(std::abs(Complex(1.0, 0.0) * std::conj(i) + Complex(0.5, 0.1)) < 1e-10);
}

TEST_CASE("39-bus initialization leaves every state derivative at zero") {
    const SystemCase c = load_case(std::string(GS_CASE_DIR) + "/ieee39.json");
    const PowerFlowSolution pf = solve_powerflow(c);
    const std::vector<Device> devs = init_devices(c, pf);
    CHECK(devs.size() == 31);
    double worst = 0.0;
    for (const auto& d : devs) {
        double out[3] = {0.0, 0.0, 0.0};
        const int nx = d.n_states();
        device_rhs(d.state, pf.voltage(c.index_of(d.bus())), 0.0, {out, size_t(nx)});
        for (int k = 0; k < nx; ++k) worst = std::max(worst, std::abs(out[k]));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("machine blocks have the boxed structure") {
    std::mt19937 rng(31u);
    const Snapshot snap = snap_one(1, {1.0, 0.0}, {0.98, 0.02});
    for (int trial = 0; trial < 50; ++trial) {
        const SynMachineState sm = random_machine(rng);
        const StrengthBlocks b = sm_blocks(sm, snap);
        CHECK(mat_norm(b.a1) == 0.0);
        CHECK(mat_norm(b.b2) == 0.0);
        CHECK(mat_diff(b.b1, b.a) == 0.0);
        CHECK(mat_diff(b.c2, b.a) == 0.0);
        CHECK(mat_diff(b.a, mat2_of_complex(-1.0 / sm.zs())) < 1e-15);
    }

    SynMachineState sm = random_machine(rng);
    sm.ra = 0.0;
    sm.xd1 = 0.2;
    CHECK(mat_diff(sm_blocks(sm, snap).a, mat2_of_complex({0.0, 5.0})) < 1e-14);
}

TEST_CASE("machine curvature block scales exactly as inverse inertia") {
    std::mt19937 rng(32u);
    const Snapshot snap = snap_one(1, {1.0, 0.0}, {0.99, -0.01});
    SynMachineState sm = random_machine(rng);
    const Mat2 a2 = sm_blocks(sm, snap).a2;
    SynMachineState heavy = sm;
    heavy.m *= 2.0;
    const Mat2 a2_heavy = sm_blocks(heavy, snap).a2;
    CHECK(mat_diff(a2_heavy * 2.0, a2) < 1e-14 * mat_norm(a2));

    heavy.m = 1e14;
    CHECK(mat_norm(sm_blocks(heavy, snap).a2) < 1e-9);
}

TEST_CASE("machine curvature block agrees with a scalar-complex transcription") {
    std::mt19937 rng(33u);
    const Snapshot snap = snap_one(1, {1.02, -0.03}, {0.97, 0.05});
    for (int trial = 0; trial < 50; ++trial) {
        const SynMachineState sm = random_machine(rng);
        const Mat2 a2 = sm_blocks(sm, snap).a2;
        const Complex ac = -1.0 / sm.zs();
        const Complex e = sm.emf();
        auto apply = [&](Complex x) {
            // j a E (omega_b / M) Re{conj(E) a x}
            const double re = std::real(std::conj(e) * (ac * x));
            return Complex(0.0, 1.0) * ac * e * (sm.omega_b / sm.m) * re;
        };
        const Complex c1 = apply({1.0, 0.0});
        const Complex c2 = apply({0.0, 1.0});
        const Mat2 want{c1.real(), c2.real(), c1.imag(), c2.imag()};
        CHECK(mat_diff(a2, want) < 1e-13 * std::max(1.0, mat_norm(want)));
    }
}

TEST_CASE("converter blocks match an independent complex transcription") {
    std::mt19937 rng(34u);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const GflState g = random_gfl(rng);
        const Complex vm = std::polar(0.9 + 0.2 * u(rng), -0.3 + 0.6 * u(rng));
        const Complex vp = std::polar(0.9 + 0.2 * u(rng), -0.3 + 0.6 * u(rng));
        const Snapshot snap = snap_one(1, vm, vp);
        const StrengthBlocks b = gfl_blocks(g, snap);

        const double v_til = 0.5 * (std::abs(vm) + std::abs(vp));
        const double v_hat2 = std::abs(vm) * std::abs(vp);
        const Complex e = 0.5 * (vm / std::abs(vm) + vp / std::abs(vp));
        const Complex vvec = 0.5 * (vm + vp);
        const Complex ic = g.i.to_complex();
        const Complex sref = g.s_ref();
        const Complex sref_c = std::conj(sref);

        auto cols = [](auto f) {
            const Complex c1 = f(Complex{1.0, 0.0});
            const Complex c2 = f(Complex{0.0, 1.0});
            return Mat2{c1.real(), c2.real(), c1.imag(), c2.imag()};
        };
        const Mat2 a = cols([&](Complex x) {
            return ic * e * Complex(0.0, std::imag(x / e)) / v_til;
        });
        const Mat2 b1 = cols([&](Complex x) {
            return ic * e * Complex(0.0, std::imag(x / vvec));
        });
        const Mat2 a1 = cols([&](Complex x) {
            const Complex inner = sref * std::real(x / e) / e;
            return e * (-std::conj(inner)) / (g.t_i * v_hat2);
        });
        const Mat2 a2 = cols([&](Complex x) {
            return v_til * e * (sref_c * sref_c * std::real(x / e)) /
                   (ic * g.t_i * g.t_i * v_hat2 * v_hat2);
        });
        const Mat2 b2 = cols([&](Complex x) {
            const Complex y = x / e;
            return e *
                   (-std::imag(y) / (g.t_f * g.droop) - sref_c * std::real(y)) /
                   (g.t_i * v_hat2);
        });

        CHECK(mat_diff(b.a, a) < 1e-12 * std::max(1.0, mat_norm(a)));
        CHECK(mat_diff(b.b1, b1) < 1e-12 * std::max(1.0, mat_norm(b1)));
        CHECK(mat_diff(b.a1, a1) < 1e-12 * std::max(1.0, mat_norm(a1)));
        CHECK(mat_diff(b.a2, a2) < 1e-12 * std::max(1.0, mat_norm(a2)));
        CHECK(mat_diff(b.b2, b2) < 1e-12 * std::max(1.0, mat_norm(b2)));
        CHECK(mat_diff(b.c2, b.b1) == 0.0);
    }
}

TEST_CASE("idle converter contributes nothing except the droop reaction") {
    GflState g;
    g.bus = 1;
    g.s_ref0 = 0.0;
    g.i = ClarkeVec{0.0, 0.0};
    g.xp = 0.0;
    const Snapshot snap = snap_one(1, {1.0, 0.0}, {0.95, 0.03});
    const StrengthBlocks b = gfl_blocks(g, snap);
    CHECK(mat_norm(b.a) == 0.0);
    CHECK(mat_norm(b.a1) == 0.0);
    CHECK(mat_norm(b.b1) == 0.0);
    CHECK(mat_norm(b.c2) == 0.0);
    CHECK(mat_norm(b.a2) == 0.0);
    // the droop path still reacts to a frequency jump at zero output: b2
    // keeps exactly its filter term
    const double v_hat2 = snap.v_minus[0] * snap.v_plus[0];
    const Mat2 e = mat2_of_complex(snap.rot_mean(0));
    const Mat2 droop_only =
        e * projector_im() * e.inverse() * (-1.0 / (g.t_i * g.t_f * g.droop * v_hat2));
    CHECK(mat_diff(b.b2, droop_only) < 1e-14);
}

TEST_CASE("slow current tracking suppresses the jump-rate blocks") {
    std::mt19937 rng(35u);
    GflState g = random_gfl(rng);
    const Snapshot snap = snap_one(1, {1.0, 0.0}, {0.97, 0.02});
    g.t_i = 1e9;
    const StrengthBlocks b = gfl_blocks(g, snap);
    CHECK(mat_norm(b.a1) < 1e-8);
    CHECK(mat_norm(b.a2) < 1e-8);
    CHECK(mat_norm(b.a) > 0.1);  // the algebraic rotation coupling stays
}

TEST_CASE("impedance load blocks") {
    ZLoadState zl;
    zl.bus = 1;
    zl.z = {0.0, 1.0};
    StrengthBlocks b = zload_blocks(zl);
    CHECK(mat_diff(b.a, mat2_of_complex({0.0, 1.0})) < 1e-15);  // -1/j = j

    zl.z = {1.0, 0.0};
    b = zload_blocks(zl);
    CHECK(mat_diff(b.a, -Mat2::identity()) < 1e-15);

    std::mt19937 rng(36u);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        zl.z = {0.3 + std::abs(u(rng)), u(rng)};
        b = zload_blocks(zl);
        CHECK(mat_diff(b.a * mat2_of_complex(zl.z), -Mat2::identity()) < 1e-13);
        CHECK(mat_diff(b.b1, b.a) == 0.0);
        CHECK(mat_diff(b.c2, b.a) == 0.0);
        CHECK(mat_norm(b.a1) == 0.0);
        CHECK(mat_norm(b.a2) == 0.0);
        CHECK(mat_norm(b.b2) == 0.0);
    }

    zl.embedded = true;
    b = zload_blocks(zl);
    CHECK(mat_norm(b.a) == 0.0);
    CHECK(mat_norm(b.b1) == 0.0);
    CHECK(mat_norm(b.c2) == 0.0);
}

TEST_CASE("swing equation derivatives") {
    SynMachineState sm;
    sm.bus = 1;
    sm.m = 10.0;
    sm.damping = 0.0;
    sm.ra = 0.0;
    sm.xd1 = 0.25;
    sm.omega_b = 2.0 * M_PI * 60.0;
    sm.e1q = 1.0;
    sm.delta = 0.0;
    sm.omega_r = 1.0;
    sm.pm = 0.1;

    // terminal equals the EMF: no current, no electrical power
    double out[2];
    device_rhs(sm, {1.0, 0.0}, 0.0, out);
    CHECK(out[0] == 0.0);                                   // delta-dot at omega_r = 1
    CHECK(out[1] == doctest::Approx(0.01).epsilon(1e-14));  // (p_m - p_e)/M

    sm.omega_r = 1.001;
    device_rhs(sm, {1.0, 0.0}, 0.0, out);
    CHECK(out[0] == doctest::Approx(sm.omega_b * 0.001).epsilon(1e-12));
}

TEST_CASE("converter derivatives at the tracking point") {
    GflState g;
    g.bus = 1;
    g.s_ref0 = {0.5, -0.1};
    const Complex v = std::polar(1.02, 0.1);
    g.i = ClarkeVec(g.i_ref(std::abs(v)));
    g.xp = 0.0;

    double out[3];
    device_rhs(g, v, 0.0, out);
    CHECK(std::abs(out[0]) < 1e-15);
    CHECK(std::abs(out[1]) < 1e-15);
    CHECK(std::abs(out[2]) < 1e-15);

    // bus frequency above the reference discharges the active reference
    device_rhs(g, v, 0.5, out);
    CHECK(out[2] == doctest::Approx(-0.5 / g.droop / g.t_f).epsilon(1e-12));
}

TEST_CASE("injected currents follow the stated conventions") {
    SynMachineState sm;
    sm.e1q = 1.0;
    sm.delta = 0.0;
    sm.xd1 = 0.3;
    sm.omega_b = 2.0 * M_PI * 60.0;
    sm.m = 8.0;
    CHECK(std::abs(device_current(sm, {1.0, 0.0})) < 1e-15);

    ZLoadState zl;
    zl.z = {0.0, 1.0};
    CHECK(std::abs(device_current(zl, {1.0, 0.0}) - Complex(0.0, 1.0)) < 1e-15);

    GflState g;
    g.s_ref0 = {0.4, 0.1};
    const Complex v = std::polar(0.98, -0.2);
    g.i = ClarkeVec(g.i_ref(std::abs(v)));
    // current state lives in the bus-voltage frame; the injection is rotated
    const Complex want = g.i.to_complex() * (v / std::abs(v));
    CHECK(std::abs(device_current(g, v) - want) < 1e-15);
}

TEST_CASE("analytic current rate matches finite differences at second order") {
    std::mt19937 rng(37u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const char* kind : {"sm", "gfl", "zload"}) {
        DeviceState st;
        if (kind[0] == 's') {
            st = random_machine(rng);
        } else if (kind[0] == 'g') {
            st = random_gfl(rng);
        } else {
            ZLoadState zl;
            zl.z = {0.8, 0.6};
            st = zl;
        }
        const Complex v = std::polar(1.0 + 0.05 * u(rng), 0.2 * u(rng));
        const Complex vdot = Complex(u(rng), u(rng)) * 0.5;
        const double omega_bus = std::imag(vdot / v);
        const Complex rate = device_current_rate_at(st, v, vdot);

        std::vector<double> hs{1e-3, 1e-4, 1e-5};
        std::vector<double> errs;
        for (double h : hs) {
            auto shifted = [&](double s) {
                DeviceState ds = st;
                double dx[3] = {0.0, 0.0, 0.0};
                if (auto* sm = std::get_if<SynMachineState>(&ds)) {
                    device_rhs(*sm, v, omega_bus, {dx, 2});
                    sm->delta += s * h * dx[0];
                    sm->omega_r += s * h * dx[1];
                } else if (auto* gf = std::get_if<GflState>(&ds)) {
                    device_rhs(*gf, v, omega_bus, {dx, 3});
                    gf->i.d += s * h * dx[0];
                    gf->i.q += s * h * dx[1];
                    gf->xp += s * h * dx[2];
                }
                return device_current(ds, v + s * h * vdot);
            };
            errs.push_back(std::abs((shifted(1.0) - shifted(-1.0)) / (2.0 * h) - rate));
        }
        // slope of the log-log error decay: one order of h per decade squared
        const double slope = std::log(errs.front() / errs.back()) / std::log(hs.front() / hs.back());
        if (kind[0] == 'z') {
            CHECK(errs.back() < 1e-10);  // exact linear device: FD is exact
        } else {
            CHECK(slope >= 1.9);
        }
    }
}

TEST_CASE("degenerate snapshot blocks equal the current Jacobian") {
    std::mt19937 rng(38u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Complex v = std::polar(1.0 + 0.05 * u(rng), 0.3 * u(rng));
        const Snapshot snap = snap_one(1, v, v);  // no jump

        std::vector<DeviceState> states;
        states.emplace_back(random_machine(rng));
        states.emplace_back(random_gfl(rng));
        ZLoadState zl;
        zl.z = {0.9, 0.4};
        states.emplace_back(zl);

        for (const DeviceState& st : states) {
            Mat2 a{};
            if (const auto* sm = std::get_if<SynMachineState>(&st))
                a = sm_blocks(*sm, snap).a;
            else if (const auto* g = std::get_if<GflState>(&st))
                a = gfl_blocks(*g, snap).a;
            else
                a = zload_blocks(std::get<ZLoadState>(st)).a;

            const Mat2 jac = device_current_jacobian(st, v);
            CHECK(mat_diff(a, jac) < 1e-12 * std::max(1.0, mat_norm(jac)));

            // central finite differences of the injection around v
            const double eps = 1e-6;
            auto col = [&](Complex dir) {
                const Complex ip = device_current(st, v + eps * dir);
                const Complex im = device_current(st, v - eps * dir);
                return (ip - im) / (2.0 * eps);
            };
            const Complex c1 = col({1.0, 0.0});
            const Complex c2 = col({0.0, 1.0});
            const Mat2 fd{c1.real(), c2.real(), c1.imag(), c2.imag()};
            CHECK(mat_diff(jac, fd) < 1e-6 * std::max(1.0, mat_norm(jac)));
        }
    }
}

TEST_CASE("current acceleration decomposition is consistent with the rate") {
    // advance the rate along the trajectory numerically and compare with the
    // drive + feedthrough * v'' decomposition
    std::mt19937 rng(39u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const SynMachineState sm = random_machine(rng);
        const Complex v = std::polar(1.0, 0.1 * u(rng));
        const Complex eta1 = Complex(0.02 * u(rng), 0.3 * u(rng));
        const Complex vdot = v * eta1;
        const CurrentRate acc = device_current_accel(sm, v, eta1);

        auto fd_at = [&](double h) {
            auto rate_at = [&](double s) {
                SynMachineState ds = sm;
                double dx[2];
                device_rhs(ds, v, 0.0, dx);
                ds.delta += s * h * dx[0];
                ds.omega_r += s * h * dx[1];
                return device_current_rate_at(ds, v + s * h * vdot, vdot);
            };
            // v'' = 0 along this straight path, so only the drive part remains
            return (rate_at(1.0) - rate_at(-1.0)) / (2.0 * h);
        };
        // truncation shrinks ~100x per decade of h until the rounding floor
        const double coarse = std::abs(fd_at(1e-3) - acc.drive);
        const double fine = std::abs(fd_at(1e-4) - acc.drive);
        CHECK(fine < 1e-6 * std::max(1.0, std::abs(acc.drive)));
        CHECK(fine < 0.05 * coarse + 1e-8 * std::abs(acc.drive));
    }
}

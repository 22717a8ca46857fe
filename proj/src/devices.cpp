#include "gridstrength/devices.hpp"

#include <cmath>

#include "gridstrength/strength.hpp"

namespace gs {

namespace {

const Mat2 kKeepIm{0.0, 0.0, 0.0, 1.0};   // [d, q] -> [0, q]
const Mat2 kMirrorD{-1.0, 0.0, 0.0, 1.0}; // [d, q] -> [-d, q]

Complex sm_current(const SynMachineState& st, Complex vbar) {
    return (st.emf() - vbar) / st.zs();
}

// air-gap power feeding the rotor balance
double sm_pe(const SynMachineState& st, Complex vbar) {
    return (st.emf() * std::conj(sm_current(st, vbar))).real();
}

double sm_omega_dot(const SynMachineState& st, Complex vbar) {
    return (st.pm - sm_pe(st, vbar) - st.damping * (st.omega_r - 1.0)) / st.m;
}

// Filtered active-power droop. The frequency input enters with a minus so a
// high bus frequency lowers the active reference (negative feedback); the
// jump-curvature block b2 carries the matching sign on its 1/(T_f R) term.
double gfl_xp_dot(const GflState& st, double omega_bus) {
    return (-(omega_bus - st.omega_ref) / st.droop - st.xp) / st.t_f;
}

Mat2 gfl_angle_feedthrough(Complex idev, Complex vbar) {
    // j Im{vdot / vbar} idev, the frame-tracking part of the current rate
    return mat2_of_complex(idev) * kKeepIm * mat2_of_complex(vbar).inverse();
}

}  // namespace

int Device::bus() const {
    return std::visit([](const auto& s) { return s.bus; }, state);
}

DeviceType Device::type() const {
    if (std::holds_alternative<SynMachineState>(state)) return DeviceType::SynMachine;
    if (std::holds_alternative<GflState>(state)) return DeviceType::Gfl;
    return DeviceType::ZLoad;
}

int Device::n_states() const {
    switch (type()) {
        case DeviceType::SynMachine: return 2;
        case DeviceType::Gfl: return 3;
        default: return 0;
    }
}

std::vector<Device> init_devices(const SystemCase& c, const PowerFlowSolution& pf) {
    const int n = c.n();

    // Generation each bus must supply: power-flow injection plus what the
    // local constant-impedance loads consume. Split among the bus's
    // machines/converters in proportion to their scheduled active power
    // (evenly when the schedule sums to zero), so slack imbalance and PV
    // reactive output land on the generating devices.
    std::vector<Complex> gen(n, Complex(0.0, 0.0));
    std::vector<double> p_sched(n, 0.0);
    std::vector<int> n_gen(n, 0);
    for (int k = 0; k < n; ++k) gen[k] = pf.s_inj[k];
    for (const auto& d : c.devices) {
        const int k = c.index_of(d.bus);
        if (d.type == DeviceType::ZLoad) {
            gen[k] += Complex(d.p, d.q);
        } else {
            p_sched[k] += d.p;
            ++n_gen[k];
        }
    }

    std::vector<Device> out;
    out.reserve(c.devices.size());
    for (const auto& spec : c.devices) {
        const int k = c.index_of(spec.bus);
        const Complex vb = pf.voltage(k);
        Device dev;
        dev.id = spec.id;
        if (spec.type == DeviceType::ZLoad) {
            ZLoadState st;
            st.bus = spec.bus;
            st.z = std::norm(vb) / std::conj(Complex(spec.p, spec.q));
            st.embedded = c.flags.embed_zloads;
            dev.state = st;
        } else {
            const double w = p_sched[k] != 0.0 ? spec.p / p_sched[k] : 1.0 / n_gen[k];
            const Complex s_gen = gen[k] * w;
            if (spec.type == DeviceType::SynMachine) {
                SynMachineState st;
                st.bus = spec.bus;
                st.m = 2.0 * spec.h;
                st.damping = spec.damping;
                st.ra = spec.ra;
                st.xd1 = spec.xd1;
                st.omega_b = c.base.omega_b();
                const Complex ig = std::conj(s_gen / vb);
                const Complex e = vb + st.zs() * ig;
                st.e1q = std::abs(e);
                st.delta = std::arg(e);
                st.omega_r = 1.0;
                st.pm = (e * std::conj(ig)).real();
                dev.state = st;
            } else {
                GflState st;
                st.bus = spec.bus;
                st.t_i = spec.t_i;
                st.t_f = spec.t_f;
                st.droop = spec.droop;
                st.omega_ref = 0.0;
                st.s_ref0 = s_gen;
                st.i = ClarkeVec(st.i_ref(std::abs(vb)));
                st.xp = 0.0;
                dev.state = st;
            }
        }
        out.push_back(std::move(dev));
    }

    // The initialized devices must hold the power-flow point as a true
    // equilibrium: zero state derivatives and per-bus current balance.
    double resid = 0.0;
    for (const auto& dev : out) {
        const int k = c.index_of(dev.bus());
        double dx[3] = {0.0, 0.0, 0.0};
        device_rhs(dev.state, pf.voltage(k), 0.0, std::span<double>(dx, dev.n_states()));
        for (int s = 0; s < dev.n_states(); ++s) resid = std::max(resid, std::abs(dx[s]));
    }
    const BlockMatrix y = build_admittance(c);
    std::vector<Complex> v(n), inet(n, Complex(0.0, 0.0));
    for (int k = 0; k < n; ++k) v[k] = pf.voltage(k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inet[i] += y.block(i, j).to_complex() * v[j];
    for (const auto& dev : out) {
        const int k = c.index_of(dev.bus());
        // physical current regardless of the embed flag
        if (const auto* z = std::get_if<ZLoadState>(&dev.state))
            inet[k] -= -v[k] / z->z;
        else
            inet[k] -= device_current(dev.state, v[k]);
    }
    for (int k = 0; k < n; ++k) resid = std::max(resid, std::abs(inet[k]));
    if (!(resid < 1e-8)) throw InconsistentPowerFlow(resid);
    return out;
}

void device_rhs(const DeviceState& st, Complex vbar, double omega_bus, std::span<double> out) {
    if (const auto* sm = std::get_if<SynMachineState>(&st)) {
        out[0] = sm->omega_b * (sm->omega_r - 1.0);
        out[1] = sm_omega_dot(*sm, vbar);
    } else if (const auto* g = std::get_if<GflState>(&st)) {
        const double v = std::abs(vbar);
        if (!(v > 0.0)) throw DegenerateVoltage();
        const Complex di = (g->i_ref(v) - g->i.to_complex()) / g->t_i;
        out[0] = di.real();
        out[1] = di.imag();
        out[2] = gfl_xp_dot(*g, omega_bus);
    }
}

Complex device_current(const DeviceState& st, Complex vbar) {
    if (const auto* sm = std::get_if<SynMachineState>(&st)) return sm_current(*sm, vbar);
    if (const auto* g = std::get_if<GflState>(&st)) {
        const double v = std::abs(vbar);
        if (!(v > 0.0)) throw DegenerateVoltage();
        return g->i.to_complex() * (vbar / v);
    }
    const auto& z = std::get<ZLoadState>(st);
    return z.embedded ? Complex(0.0, 0.0) : -vbar / z.z;
}

Mat2 device_current_jacobian(const DeviceState& st, Complex vbar) {
    if (const auto* sm = std::get_if<SynMachineState>(&st))
        return mat2_of_complex(-1.0 / sm->zs());
    if (const auto* g = std::get_if<GflState>(&st)) {
        const double v = std::abs(vbar);
        if (!(v > 0.0)) throw DegenerateVoltage();
        const double d = vbar.real() / v, q = vbar.imag() / v;
        const Mat2 unit_dir{1.0 - d * d, -d * q, -q * d, 1.0 - q * q};
        return mat2_of_complex(g->i.to_complex()) * unit_dir * (1.0 / v);
    }
    const auto& z = std::get<ZLoadState>(st);
    return z.embedded ? Mat2{0.0, 0.0, 0.0, 0.0} : mat2_of_complex(-1.0 / z.z);
}

CurrentRate device_current_rate(const DeviceState& st, Complex vbar) {
    CurrentRate r;
    if (const auto* sm = std::get_if<SynMachineState>(&st)) {
        const Complex e_dot =
            Complex(0.0, sm->omega_b * (sm->omega_r - 1.0)) * sm->emf();
        r.drive = e_dot / sm->zs();
        r.feedthrough = mat2_of_complex(-1.0 / sm->zs());
    } else if (const auto* g = std::get_if<GflState>(&st)) {
        const double v = std::abs(vbar);
        if (!(v > 0.0)) throw DegenerateVoltage();
        const Complex rot = vbar / v;
        const Complex i_dq = g->i.to_complex();
        r.drive = ((g->i_ref(v) - i_dq) / g->t_i) * rot;
        r.feedthrough = gfl_angle_feedthrough(i_dq * rot, vbar);
    } else {
        const auto& z = std::get<ZLoadState>(st);
        r.drive = {0.0, 0.0};
        r.feedthrough = z.embedded ? Mat2{} : mat2_of_complex(-1.0 / z.z);
    }
    return r;
}

Complex device_current_rate_at(const DeviceState& st, Complex vbar, Complex vdot) {
    const CurrentRate r = device_current_rate(st, vbar);
    return r.drive + (r.feedthrough * ClarkeVec(vdot)).to_complex();
}

CurrentRate device_current_accel(const DeviceState& st, Complex vbar, Complex eta1) {
    CurrentRate r;
    if (const auto* sm = std::get_if<SynMachineState>(&st)) {
        const double slip = sm->omega_b * (sm->omega_r - 1.0);
        const Complex e_ddot =
            sm->emf() * Complex(-slip * slip, sm->omega_b * sm_omega_dot(*sm, vbar));
        r.drive = e_ddot / sm->zs();
        r.feedthrough = mat2_of_complex(-1.0 / sm->zs());
    } else if (const auto* g = std::get_if<GflState>(&st)) {
        const double v = std::abs(vbar);
        if (!(v > 0.0)) throw DegenerateVoltage();
        const Complex rot = vbar / v;
        const double rho = eta1.real();
        const double th_dot = eta1.imag();
        const Complex i_dq = g->i.to_complex();
        const Complex i_ref = g->i_ref(v);
        const Complex i_dq_dot = (i_ref - i_dq) / g->t_i;
        const Complex i_ref_dot =
            Complex(gfl_xp_dot(*g, th_dot), 0.0) / v - i_ref * rho;
        const Complex i_dq_ddot = (i_ref_dot - i_dq_dot) / g->t_i;
        const Complex eta1_sq = eta1 * eta1;
        // frame-tracking terms: theta-ddot splits into the v-ddot feedthrough
        // and the -Im{eta'^2} remainder
        r.drive = i_dq_ddot * rot + Complex(0.0, 2.0 * th_dot) * i_dq_dot * rot +
                  (i_dq * rot) * Complex(-th_dot * th_dot, -eta1_sq.imag());
        r.feedthrough = gfl_angle_feedthrough(i_dq * rot, vbar);
    } else {
        const auto& z = std::get<ZLoadState>(st);
        r.drive = {0.0, 0.0};
        r.feedthrough = z.embedded ? Mat2{} : mat2_of_complex(-1.0 / z.z);
    }
    return r;
}

double gfl_dropped_term_magnitude(const GflState& st, const Snapshot& snap) {
    const int k = snap.index_of(st.bus);
    const Complex i = st.i.to_complex();
    if (std::abs(i) < 1e-14) return 0.0;
    const Complex rot_m = std::polar(1.0, snap.th_minus[k]);
    const Complex rot_p = std::polar(1.0, snap.th_plus[k]);
    // current jump seen from the network frame (the dq state is continuous)
    const Complex di_dev = i * (rot_p - rot_m);
    const Complex i_dev_til = i * 0.5 * (rot_m + rot_p);
    const Complex i_ref_til = 0.5 * (st.i_ref(snap.v_minus[k]) + st.i_ref(snap.v_plus[k]));
    const Complex eta1_til = 0.5 * (snap.eta1_minus[k] + snap.eta1_plus[k]);
    const Complex tracking = (i_ref_til - i) / (st.t_i * i) + Complex(0.0, eta1_til.imag());
    const Complex dv = snap.vbar_plus(k) - snap.vbar_minus(k);
    const double dw_dropped = -std::imag(eta1_til * dv / snap.vbar_mean(k));
    return std::abs(di_dev * tracking + i_dev_til * Complex(0.0, dw_dropped));
}

StrengthBlocks sm_blocks(const SynMachineState& st, const Snapshot&) {
    StrengthBlocks b;
    const Mat2 a = mat2_of_complex(-1.0 / st.zs());
    const Mat2 e = mat2_of_complex(st.emf());
    const Mat2 ec = mat2_of_complex(std::conj(st.emf()));
    b.a = a;
    b.a1 = Mat2{};
    b.b1 = a;
    // jump of the rotor acceleration through the electrical power
    b.a2 = mat2_of_complex(Complex(0.0, 1.0)) * a * e * (projector_re() * (st.omega_b / st.m)) *
           ec * a;
    b.b2 = Mat2{};
    b.c2 = a;
    return b;
}

StrengthBlocks gfl_blocks(const GflState& st, const Snapshot& snap) {
    const int k = snap.index_of(st.bus);
    const double v_m = snap.v_minus[k];
    const double v_p = snap.v_plus[k];
    const double v_til = 0.5 * (v_m + v_p);      // arithmetic mean magnitude
    const double v_hat2 = v_m * v_p;             // squared geometric mean
    if (!(v_hat2 > 0.0) || v_til == 0.0) throw DegenerateVoltage();
    const Mat2 e = mat2_of_complex(snap.rot_mean(k));
    const Mat2 e_inv = e.inverse();
    const Mat2 i_b = mat2_of_complex(st.i.to_complex());
    const Mat2 s_ref = mat2_of_complex(st.s_ref());
    const Mat2 s_ref_c = mat2_of_complex(std::conj(st.s_ref()));
    const Mat2 v_vec_inv = mat2_of_complex(snap.vbar_mean(k)).inverse();

    StrengthBlocks b;
    b.a = i_b * e * kKeepIm * e_inv * (1.0 / v_til);
    b.b1 = i_b * e * kKeepIm * v_vec_inv;
    b.a1 = e * kMirrorD * e_inv * s_ref * projector_re() * e_inv * (1.0 / (st.t_i * v_hat2));
    b.c2 = b.b1;
    // reference-current curvature; vanishes in the consistent idle limit
    const bool idle = std::abs(st.s_ref()) < 1e-14 && st.i.magnitude() < 1e-14;
    b.a2 = idle ? Mat2{}
                : e * i_b.inverse() * s_ref_c * s_ref_c * projector_re() * e_inv *
                      (v_til / (st.t_i * st.t_i * v_hat2 * v_hat2));
    b.b2 = e * (projector_im() * (-1.0 / (st.t_f * st.droop)) - s_ref_c * projector_re()) *
           e_inv * (1.0 / (st.t_i * v_hat2));
    return b;
}

StrengthBlocks zload_blocks(const ZLoadState& st) {
    StrengthBlocks b;
    if (st.embedded) return b;
    const Mat2 a = mat2_of_complex(-1.0 / st.z);
    b.a = a;
    b.b1 = a;
    b.c2 = a;
    return b;
}

StrengthBlocks device_blocks(const Device& d, const Snapshot& snap) {
    if (const auto* sm = std::get_if<SynMachineState>(&d.state)) return sm_blocks(*sm, snap);
    if (const auto* g = std::get_if<GflState>(&d.state)) return gfl_blocks(*g, snap);
    return zload_blocks(std::get<ZLoadState>(d.state));
}

}  // namespace gs

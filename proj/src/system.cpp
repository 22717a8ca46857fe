#include "gridstrength/system.hpp"

#include <cmath>

namespace gs {

System::System(SystemCase c) : case_(std::move(c)) {
    y_ = build_admittance(case_);
    pf_ = solve_powerflow(case_);
    devices_ = init_devices(case_, pf_);
    if (case_.flags.embed_zloads) {
        for (const auto& d : devices_)
            if (const auto* z = std::get_if<ZLoadState>(&d.state))
                y_.add_block(case_.index_of(z->bus), case_.index_of(z->bus),
                             mat2_of_complex(1.0 / z->z));
    }
    z_ = impedance(y_);

    const int n = case_.n();
    v_.resize(n);
    for (int k = 0; k < n; ++k) v_[k] = pf_.voltage(k);
    i_src_.assign(n, Complex(0.0, 0.0));
    // polish the power-flow point to the algebraic solver's own tolerance
    v_ = solve_algebraic(i_src_, v_);

    nx_ = 0;
    for (const auto& d : devices_) {
        nx_ += d.n_states();
        if (d.type() == DeviceType::Gfl) has_gfl_ = true;
    }
}

double System::algebraic_residual(const std::vector<Complex>& v,
                                  const std::vector<Complex>& i_src) const {
    const int n = case_.n();
    std::vector<Complex> r(n, Complex(0.0, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r[i] += y_.block(i, j).to_complex() * v[j];
    for (const auto& d : devices_) {
        const int k = case_.index_of(d.bus());
        r[k] -= device_current(d.state, v[k]);
    }
    double m = 0.0;
    for (int k = 0; k < n; ++k) m = std::max(m, std::abs(r[k] - i_src[k]));
    return m;
}

std::vector<Complex> System::solve_algebraic(const std::vector<Complex>& i_src,
                                             std::vector<Complex> guess) const {
    const int n = case_.n();
    // residual plus its roundoff scale (largest term magnitude in any row)
    double scale = 1.0;
    auto residual = [&](const std::vector<Complex>& v) {
        std::vector<Complex> r(n, Complex(0.0, 0.0));
        for (int i = 0; i < n; ++i) {
            double row_scale = std::abs(i_src[i]);
            for (int j = 0; j < n; ++j) {
                const Complex term = y_.block(i, j).to_complex() * v[j];
                r[i] += term;
                row_scale = std::max(row_scale, std::abs(term));
            }
            scale = std::max(scale, row_scale);
        }
        for (const auto& d : devices_) {
            const int k = case_.index_of(d.bus());
            r[k] -= device_current(d.state, v[k]);
        }
        for (int k = 0; k < n; ++k) r[k] -= i_src[k];
        return r;
    };

    const int max_iters = 40;
    double norm = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        const std::vector<Complex> r0 = residual(guess);
        norm = 0.0;
        for (const auto& rk : r0) norm = std::max(norm, std::abs(rk));
        if (norm < 1e-12 * scale) return guess;

        BlockMatrix jac = y_;
        for (const auto& d : devices_) {
            const int k = case_.index_of(d.bus());
            jac.add_block(k, k, device_current_jacobian(d.state, guess[k]) * -1.0);
        }
        std::vector<Complex> rhs(n);
        for (int k = 0; k < n; ++k) rhs[k] = -r0[k];
        std::vector<Complex> dv;
        try {
            dv = block_solve(jac, rhs);
        } catch (const SingularMatrix&) {
            throw SingularAlgebraicSystem();
        }
        for (int k = 0; k < n; ++k) guess[k] += dv[k];
    }
    throw NonConvergence(max_iters, norm);
}

void System::apply_disturbance(const Disturbance& dist) {
    const int k = case_.index_of(dist.bus_id);
    const Complex di = dist.di_pq().to_complex();
    double th_p = std::arg(v_[k]);
    std::vector<Complex> i_src = i_src_;
    std::vector<Complex> v = v_;

    bool ok = false;
    for (int it = 0; it < 50; ++it) {
        i_src[k] = i_src_[k] - di * std::polar(1.0, th_p);
        v = solve_algebraic(i_src, v);
        const double th_n = std::arg(v[k]);
        const double err = std::remainder(th_n - th_p, 2.0 * M_PI);
        if (std::abs(err) < 1e-12) {
            ok = true;
            break;
        }
        th_p += 0.8 * err;
    }
    if (!ok) throw FixedPointDivergence();
    i_src_ = i_src;
    v_ = v;
}

std::vector<Complex> System::cf_first(const std::vector<Complex>& v) const {
    const int n = case_.n();
    BlockMatrix lhs = y_;
    std::vector<Complex> drive(n, Complex(0.0, 0.0));
    for (const auto& d : devices_) {
        const int k = case_.index_of(d.bus());
        const CurrentRate r = device_current_rate(d.state, v[k]);
        lhs.add_block(k, k, -r.feedthrough);
        drive[k] += r.drive;
    }
    std::vector<Complex> v_dot;
    try {
        v_dot = block_solve(lhs, drive);
    } catch (const SingularMatrix&) {
        throw SingularResolvent(1);
    }
    std::vector<Complex> eta1(n);
    for (int k = 0; k < n; ++k) {
        if (!(std::abs(v[k]) > 0.0)) throw DegenerateVoltage();
        eta1[k] = v_dot[k] / v[k];
    }
    return eta1;
}

std::vector<Complex> System::cf_second(const std::vector<Complex>& v,
                                       const std::vector<Complex>& eta1) const {
    const int n = case_.n();
    BlockMatrix lhs = y_;
    std::vector<Complex> drive(n, Complex(0.0, 0.0));
    for (const auto& d : devices_) {
        const int k = case_.index_of(d.bus());
        const CurrentRate r = device_current_accel(d.state, v[k], eta1[k]);
        lhs.add_block(k, k, -r.feedthrough);
        drive[k] += r.drive;
    }
    std::vector<Complex> v_ddot;
    try {
        v_ddot = block_solve(lhs, drive);
    } catch (const SingularMatrix&) {
        throw SingularResolvent(2);
    }
    std::vector<Complex> eta2(n);
    for (int k = 0; k < n; ++k) {
        if (!(std::abs(v[k]) > 0.0)) throw DegenerateVoltage();
        eta2[k] = v_ddot[k] / v[k];
    }
    return eta2;
}

std::vector<double> System::pack_states() const {
    std::vector<double> x;
    x.reserve(nx_);
    for (const auto& d : devices_) {
        if (const auto* sm = std::get_if<SynMachineState>(&d.state)) {
            x.push_back(sm->delta);
            x.push_back(sm->omega_r);
        } else if (const auto* g = std::get_if<GflState>(&d.state)) {
            x.push_back(g->i.d);
            x.push_back(g->i.q);
            x.push_back(g->xp);
        }
    }
    return x;
}

void System::unpack_states(const std::vector<double>& x) {
    size_t p = 0;
    for (auto& d : devices_) {
        if (auto* sm = std::get_if<SynMachineState>(&d.state)) {
            sm->delta = x[p++];
            sm->omega_r = x[p++];
        } else if (auto* g = std::get_if<GflState>(&d.state)) {
            g->i.d = x[p++];
            g->i.q = x[p++];
            g->xp = x[p++];
        }
    }
}

}  // namespace gs

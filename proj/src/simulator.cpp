#include "gridstrength/simulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace gs {

namespace {

constexpr double kGridEps = 1e-12;

using DenseMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-bus current-balance residual, flattened to 2n reals.
std::vector<double> alg_residual_flat(const System& sys, const std::vector<double>& v_flat) {
    std::vector<double> r = sys.admittance() * v_flat;
    const std::vector<Complex> v = unflatten(v_flat);
    const auto& spec = sys.spec();
    for (const auto& d : sys.devices()) {
        const int k = spec.index_of(d.bus());
        const Complex i = device_current(d.state, v[k]);
        r[2 * k] -= i.real();
        r[2 * k + 1] -= i.imag();
    }
    const auto& src = sys.source();
    for (size_t k = 0; k < src.size(); ++k) {
        r[2 * k] -= src[k].real();
        r[2 * k + 1] -= src[k].imag();
    }
    return r;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Chord-Newton solver for the network algebraics. The Jacobian is factorized
// once and reused (it is exactly constant for machine/impedance systems);
// a stalling solve rebuilds it at the current point and retries.
class AlgebraicSolver {
  public:
    double solve(const System& sys, std::vector<double>& v_flat) {
        if (!built_) rebuild(sys, v_flat);
        if (scale_ <= 0.0) scale_ = residual_scale(sys, v_flat);
        double norm = 0.0;
        for (int attempt = 0; attempt < 2; ++attempt) {
            for (int it = 0; it < 12; ++it) {
                const std::vector<double> r = alg_residual_flat(sys, v_flat);
                norm = max_abs(r);
                if (norm < 1e-12 * scale_) return norm;
                const Eigen::Map<const Eigen::VectorXd> rv(r.data(), long(r.size()));
                const Eigen::VectorXd dv = lu_.solve(rv);
                for (size_t k = 0; k < v_flat.size(); ++k) v_flat[k] -= dv(long(k));
            }
            if (attempt == 0) rebuild(sys, v_flat);
        }
        if (norm < 1e-10 * scale_) return norm;
        throw NonConvergence(24, norm);
    }

    void rebuild(const System& sys, const std::vector<double>& v_flat) {
        const int n = sys.n();
        DenseMat jac(2 * n, 2 * n);
        const BlockMatrix& y = sys.admittance();
        for (int r = 0; r < 2 * n; ++r)
            for (int c = 0; c < 2 * n; ++c) jac(r, c) = y.at(r, c);
        const std::vector<Complex> v = unflatten(v_flat);
        const auto& spec = sys.spec();
        for (const auto& d : sys.devices()) {
            const int k = spec.index_of(d.bus());
            const Mat2 b = device_current_jacobian(d.state, v[k]);
            jac(2 * k, 2 * k) -= b.m11;
            jac(2 * k, 2 * k + 1) -= b.m12;
            jac(2 * k + 1, 2 * k) -= b.m21;
            jac(2 * k + 1, 2 * k + 1) -= b.m22;
        }
        lu_.compute(jac);
        built_ = true;
    }

  private:
    // roundoff scale: the largest single term that enters the residual rows
    static double residual_scale(const System& sys, const std::vector<double>& v_flat) {
        const BlockMatrix& y = sys.admittance();
        const std::vector<Complex> v = unflatten(v_flat);
        double s = 1.0;
        for (int i = 0; i < sys.n(); ++i)
            for (int j = 0; j < sys.n(); ++j)
                s = std::max(s, std::abs(y.block(i, j).to_complex() * v[j]));
        return s;
    }

    Eigen::PartialPivLU<DenseMat> lu_;
    bool built_ = false;
    double scale_ = 0.0;
};

// Resolvent solves for the first and second order complex frequencies. The
// rate and acceleration feedthroughs coincide for every device model, so one
// factorization of (Y - B) serves both orders; it is constant unless a
// converter makes B depend on the operating point.
class CfSolver {
  public:
    explicit CfSolver(const System& sys) : varies_(sys.has_gfl()) {}

    std::vector<Complex> eta1(const System& sys, const std::vector<Complex>& v) {
        factor(sys, v);
        const int n = sys.n();
        std::vector<Complex> drive(n, Complex(0.0, 0.0));
        const auto& spec = sys.spec();
        for (const auto& d : sys.devices()) {
            const int k = spec.index_of(d.bus());
            drive[k] += device_current_rate(d.state, v[k]).drive;
        }
        return divide(solve(drive), v);
    }

    std::vector<Complex> eta2(const System& sys, const std::vector<Complex>& v,
                              const std::vector<Complex>& eta1) {
        factor(sys, v);
        const int n = sys.n();
        std::vector<Complex> drive(n, Complex(0.0, 0.0));
        const auto& spec = sys.spec();
        for (const auto& d : sys.devices()) {
            const int k = spec.index_of(d.bus());
            drive[k] += device_current_accel(d.state, v[k], eta1[k]).drive;
        }
        return divide(solve(drive), v);
    }

  private:
    void factor(const System& sys, const std::vector<Complex>& v) {
        if (built_ && !varies_) return;
        BlockMatrix lhs = sys.admittance();
        const auto& spec = sys.spec();
        for (const auto& d : sys.devices()) {
            const int k = spec.index_of(d.bus());
            lhs.add_block(k, k, -device_current_rate(d.state, v[k]).feedthrough);
        }
        const int d = lhs.dim();
        lu_.compute(Eigen::Map<const DenseMat>(lhs.data().data(), d, d));
        if (lu_.rcond() < 1e-14) throw SingularResolvent(1);
        built_ = true;
    }

    std::vector<Complex> solve(const std::vector<Complex>& rhs) const {
        const std::vector<double> r = flatten(rhs);
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), long(r.size()));
        const Eigen::VectorXd x = lu_.solve(rv);
        std::vector<double> out(x.data(), x.data() + x.size());
        return unflatten(out);
    }

    static std::vector<Complex> divide(std::vector<Complex> num, const std::vector<Complex>& v) {
        for (size_t k = 0; k < num.size(); ++k) {
            if (!(std::abs(v[k]) > 0.0)) throw DegenerateVoltage();
            num[k] /= v[k];
        }
        return num;
    }

    Eigen::PartialPivLU<DenseMat> lu_;
    bool built_ = false;
    bool varies_ = false;
};

// All device state derivatives at an algebraically consistent point. The bus
// frequencies feeding the converter droops come from the exact resolvent
// solve.
std::vector<double> eval_rhs(System& sys, const std::vector<double>& x,
                             std::vector<double>& v_flat, AlgebraicSolver& alg, CfSolver& cf) {
    sys.unpack_states(x);
    alg.solve(sys, v_flat);
    const std::vector<Complex> v = unflatten(v_flat);
    const int n = sys.n();
    std::vector<double> omega(n, 0.0);
    if (sys.has_gfl()) {
        const std::vector<Complex> e1 = cf.eta1(sys, v);
        for (int k = 0; k < n; ++k) omega[k] = e1[k].imag();
    }
    std::vector<double> f(x.size(), 0.0);
    size_t p = 0;
    const auto& spec = sys.spec();
    for (const auto& d : sys.devices()) {
        const int k = spec.index_of(d.bus());
        device_rhs(d.state, v[k], omega[k], std::span<double>(f.data() + p, d.n_states()));
        p += d.n_states();
    }
    return f;
}

class Stepper {
  public:
    explicit Stepper(System& sys) : sys_(sys), cf_(sys) {}

    void step(double t, double h) {
        const std::vector<double> x0 = sys_.pack_states();
        std::vector<double> v_flat = flatten(sys_.voltages());
        const std::vector<double> f0 = eval_rhs(sys_, x0, v_flat, alg_, cf_);

        std::vector<double> x1 = x0;
        for (size_t k = 0; k < x1.size(); ++k) x1[k] += h * f0[k];  // explicit predictor

        bool converged = false;
        double norm = std::numeric_limits<double>::infinity();
        int rebuilds = 0;
        for (int it = 0; it < 20; ++it) {
            const std::vector<double> f1 = eval_rhs(sys_, x1, v_flat, alg_, cf_);
            std::vector<double> res = x1;
            for (size_t k = 0; k < res.size(); ++k)
                res[k] -= x0[k] + 0.5 * h * (f0[k] + f1[k]);
            const double prev = norm;
            norm = max_abs(res);
            if (norm < 1e-12) {
                converged = true;
                break;
            }
            const bool stalling = it >= 6 && norm > 0.1 * prev;
            if (!jac_built_ || (stalling && rebuilds == 0)) {
                build_jacobian(x1, v_flat, h);
                ++rebuilds;
            }
            const Eigen::Map<const Eigen::VectorXd> rv(res.data(), long(res.size()));
            const Eigen::VectorXd dx = jac_lu_.solve(rv);
            for (size_t k = 0; k < x1.size(); ++k) x1[k] -= dx(long(k));
        }
        if (!converged && !(norm < 1e-10)) throw NewtonFailure(t + h);

        sys_.unpack_states(x1);
        sys_.set_voltages(unflatten(v_flat));
    }

    double algebraic_norm() {
        std::vector<double> v_flat = flatten(sys_.voltages());
        return max_abs(alg_residual_flat(sys_, v_flat));
    }

    CfSolver& cf() { return cf_; }
    AlgebraicSolver& alg() { return alg_; }

  private:
    // FD chord Jacobian of the trapezoidal residual. The droop frequency is
    // re-derived from the exact CF in every column: it couples converter
    // states with gain 1/(R*Tf) and freezing it breaks contraction on small
    // networks.
    void build_jacobian(const std::vector<double>& x, std::vector<double> v_flat, double h) {
        const int m = int(x.size());
        const std::vector<double> f_base = eval_rhs(sys_, x, v_flat, alg_, cf_);
        DenseMat jac = DenseMat::Identity(m, m);
        const double fd = 1e-7;
        for (int col = 0; col < m; ++col) {
            std::vector<double> x2 = x;
            x2[col] += fd;
            std::vector<double> v2 = v_flat;
            const std::vector<double> f2 = eval_rhs(sys_, x2, v2, alg_, cf_);
            for (int row = 0; row < m; ++row)
                jac(row, col) -= 0.5 * h * (f2[row] - f_base[row]) / fd;
        }
        jac_lu_.compute(jac);
        jac_built_ = true;
    }

    System& sys_;
    AlgebraicSolver alg_;
    CfSolver cf_;
    Eigen::PartialPivLU<DenseMat> jac_lu_;
    bool jac_built_ = false;
};

}  // namespace

Trajectory simulate(System& sys, const std::vector<Event>& events, double t_end, double dt) {
    if (!(dt > 0.0)) throw Error("time step must be positive");
    if (t_end < 0.0) throw Error("horizon must be nonnegative");
    std::vector<Event> evs = events;
    std::stable_sort(evs.begin(), evs.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    for (const auto& e : evs)
        if (e.t < -kGridEps) throw Error("event scheduled before the simulation start");

    Trajectory traj;
    const int n = sys.n();
    Stepper stepper(sys);

    auto record = [&](double t_now) {
        const std::vector<Complex>& v = sys.voltages();
        const std::vector<Complex> e1 = stepper.cf().eta1(sys, v);
        const std::vector<Complex> e2 = stepper.cf().eta2(sys, v, e1);
        traj.t.push_back(t_now);
        std::vector<double> vm(n), th(n), rho(n), om(n), sg(n), gm(n);
        for (int k = 0; k < n; ++k) {
            vm[k] = std::abs(v[k]);
            th[k] = std::arg(v[k]);
            rho[k] = e1[k].real();
            om[k] = e1[k].imag();
            sg[k] = e2[k].real();
            gm[k] = e2[k].imag();
        }
        traj.v.push_back(std::move(vm));
        traj.theta.push_back(std::move(th));
        traj.rho.push_back(std::move(rho));
        traj.omega.push_back(std::move(om));
        traj.sigma.push_back(std::move(sg));
        traj.gamma.push_back(std::move(gm));
        traj.states.push_back(sys.pack_states());
        traj.step_residuals.push_back(stepper.algebraic_norm());
    };

    double t = 0.0;
    size_t ev = 0;
    record(t);
    while (true) {
        while (ev < evs.size() && std::abs(evs[ev].t - t) < kGridEps) {
            traj.event_rows.push_back(traj.rows() - 1);
            sys.apply_disturbance(evs[ev].dist);
            record(t);
            ++ev;
        }
        if (t >= t_end - kGridEps) break;
        double h = std::min(dt, t_end - t);
        if (ev < evs.size() && evs[ev].t <= t_end + kGridEps)
            h = std::min(h, evs[ev].t - t);  // land exactly on the event
        stepper.step(t, h);
        t += h;
        if (ev < evs.size() && std::abs(evs[ev].t - t) < kGridEps) t = evs[ev].t;
        record(t);
    }
    return traj;
}

Trajectory simulate(const SystemCase& c, const std::vector<Event>& events, double t_end,
                    double dt) {
    System sys(c);
    return simulate(sys, events, t_end, dt);
}

std::vector<ComplexFrequency> bus_complex_frequency(const Trajectory& traj, size_t row) {
    std::vector<ComplexFrequency> out(traj.buses());
    for (int k = 0; k < traj.buses(); ++k) out[k] = {traj.rho[row][k], traj.omega[row][k]};
    return out;
}

std::vector<ComplexFrequency2> bus_second_order_cf(const Trajectory& traj, size_t row) {
    std::vector<ComplexFrequency2> out(traj.buses());
    for (int k = 0; k < traj.buses(); ++k) out[k] = {traj.sigma[row][k], traj.gamma[row][k]};
    return out;
}

std::vector<MeasuredJump> measure_jump(const Trajectory& traj, double t_event) {
    for (size_t r : traj.event_rows) {
        if (std::abs(traj.t[r] - t_event) > 1e-9) continue;
        const size_t rp = r + 1;
        std::vector<MeasuredJump> out(traj.buses());
        for (int k = 0; k < traj.buses(); ++k) {
            const double vm = traj.v[r][k], vp = traj.v[rp][k];
            const double dth = std::remainder(traj.theta[rp][k] - traj.theta[r][k], 2.0 * M_PI);
            const double mean = 0.5 * (vm + vp);
            if (!(std::abs(mean) > 0.0)) throw DegenerateMagnitude();
            out[k].dv_vtheta = {(vp - vm) / mean, 2.0 * std::tan(0.5 * dth)};
            out[k].deta1 = {traj.rho[rp][k] - traj.rho[r][k], traj.omega[rp][k] - traj.omega[r][k]};
            out[k].deta2 = {traj.sigma[rp][k] - traj.sigma[r][k],
                            traj.gamma[rp][k] - traj.gamma[r][k]};
        }
        return out;
    }
    throw EventNotFound(t_event);
}

double ValidationReport::max_jump_error() const {
    double m = 0.0;
    for (const auto& r : jump_rows) m = std::max(m, std::abs(r.error));
    return m;
}

ValidationReport validate(const SystemCase& c, const Disturbance& dist, double t_event,
                          double t_end, double dt) {
    ValidationReport rep;
    rep.bus_id = dist.bus_id;
    rep.dist = dist;
    const int k = c.index_of(dist.bus_id);

    System sys_an(c);
    const Snapshot snap = solve_post_state(sys_an, dist);
    const BlockSet blocks = assemble_device_blocks(snap.devices, snap, snap.n());
    const ZeqChain chain = zeq_chain(sys_an.impedance_matrix(), blocks);
    const StrengthResult sr = strength_matrices(snap, chain);
    const JumpPrediction pred = predict_jump(sr, k, dist.di_pq());

    System sys_td(c);
    const Trajectory traj = simulate(sys_td, {Event{t_event, dist}}, t_end, dt);
    const MeasuredJump meas = measure_jump(traj, t_event)[k];

    auto row = [](const char* q, double p, double m) {
        return ValidationRow{q, p, m, p - m};
    };
    rep.jump_rows = {
        row("dv_over_vmean", pred.dv_vtheta.d, meas.dv_vtheta.d),
        row("two_tan_half_dtheta", pred.dv_vtheta.q, meas.dv_vtheta.q),
        row("drho", pred.deta1.d, meas.deta1.d),
        row("domega", pred.deta1.q, meas.deta1.q),
        row("dsigma", pred.deta2.d, meas.deta2.d),
        row("dgamma", pred.deta2.q, meas.deta2.q),
    };
    const AbsoluteJump aj = absolute_jump(pred.dv_vtheta, snap.v_minus[k]);
    rep.predicted_dv = aj.dv;
    rep.predicted_dtheta = aj.dtheta;

    // Initial post-event slopes of omega and rho against the indicator
    // prediction: omega-dot = gamma - 2 rho omega, rho-dot = sigma - rho^2
    // + omega^2, all at t+ from the predicted eta' and eta'' jumps.
    size_t r_minus = traj.rows();
    for (size_t r : traj.event_rows)
        if (std::abs(traj.t[r] - t_event) <= 1e-9) r_minus = r;
    const size_t rp = r_minus + 1;
    if (r_minus >= traj.rows() || rp + 3 >= traj.rows())
        throw Error("horizon leaves fewer than 3 steps after the event");
    const Complex eta1_pred = snap.eta1_minus[k] + pred.deta1.to_complex();
    const Complex eta2_pred = snap.eta2_minus[k] + pred.deta2.to_complex();
    const double wdot_pred = eta2_pred.imag() - 2.0 * eta1_pred.real() * eta1_pred.imag();
    const double rdot_pred = eta2_pred.real() - eta1_pred.real() * eta1_pred.real() +
                             eta1_pred.imag() * eta1_pred.imag();
    auto endpoint_slope = [&](const std::vector<std::vector<double>>& col) {
        const double h = traj.t[rp + 1] - traj.t[rp];
        return (-11.0 * col[rp][k] + 18.0 * col[rp + 1][k] - 9.0 * col[rp + 2][k] +
                2.0 * col[rp + 3][k]) /
               (6.0 * h);
    };
    rep.proc_rows = {
        row("omega_slope_t_plus", wdot_pred, endpoint_slope(traj.omega)),
        row("rho_slope_t_plus", rdot_pred, endpoint_slope(traj.rho)),
    };
    rep.max_step_residual = 0.0;
    for (double r : traj.step_residuals) rep.max_step_residual = std::max(rep.max_step_residual, r);
    for (const Device& d : snap.devices)
        if (const auto* g = std::get_if<GflState>(&d.state))
            rep.gfl_dropped_terms.emplace_back(d.id, gfl_dropped_term_magnitude(*g, snap));
    return rep;
}

}  // namespace gs

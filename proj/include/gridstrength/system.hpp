#pragma once

#include <optional>
#include <vector>

#include "gridstrength/devices.hpp"
#include "gridstrength/network.hpp"

namespace gs {

// Step disturbance: a current drawn from a bus, expressed in the frame of the
// post-event voltage angle at that bus (di_p along the voltage, di_q in
// quadrature). Positive values are a load-convention draw.
struct Disturbance {
    int bus_id = 0;
    double di_p = 1.0;
    double di_q = 0.0;

    ClarkeVec di_pq() const { return {di_p, di_q}; }
};

// Assembled runtime: case + admittance/impedance (with embedded z-loads when
// flagged) + initialized devices + the algebraic solution they balance.
class System {
  public:
    explicit System(SystemCase c);

    const SystemCase& spec() const { return case_; }
    int n() const { return case_.n(); }
    double omega_b() const { return case_.base.omega_b(); }

    const BlockMatrix& admittance() const { return y_; }
    const BlockMatrix& impedance_matrix() const { return z_; }
    const PowerFlowSolution& powerflow() const { return pf_; }

    std::vector<Device>& devices() { return devices_; }
    const std::vector<Device>& devices() const { return devices_; }

    // Current algebraic solution (bus voltages) and source vector.
    const std::vector<Complex>& voltages() const { return v_; }
    void set_voltages(std::vector<Complex> v) { v_ = std::move(v); }
    const std::vector<Complex>& source() const { return i_src_; }

    // Adds a persistent step draw of dist.di_pq() at the bus, oriented by the
    // post-event voltage angle: fixed point on theta+, then re-solve of the
    // network algebraic system with frozen states. Updates voltages().
    void apply_disturbance(const Disturbance& dist);

    // Solves Y v = sum(i_dev(v)) + i_src for v with the current device states,
    // starting from `guess`. Newton with exact residuals.
    std::vector<Complex> solve_algebraic(const std::vector<Complex>& i_src,
                                         std::vector<Complex> guess) const;

    // Network algebraic residual max-abs at a point (per-bus current balance).
    double algebraic_residual(const std::vector<Complex>& v,
                              const std::vector<Complex>& i_src) const;

    // Exact first-order bus complex frequency at an algebraic point:
    // solves (Y - B) v' = drives, returns eta'_k = v'_k / v_k.
    std::vector<Complex> cf_first(const std::vector<Complex>& v) const;

    // Second order: solves (Y - C) v'' = drives(eta'), eta''_k = v''_k / v_k.
    std::vector<Complex> cf_second(const std::vector<Complex>& v,
                                   const std::vector<Complex>& eta1) const;

    // Device state vector packing (integration order = device order).
    int n_states() const { return nx_; }
    std::vector<double> pack_states() const;
    void unpack_states(const std::vector<double>& x);

    bool has_gfl() const { return has_gfl_; }

  private:
    SystemCase case_;
    BlockMatrix y_, z_;
    PowerFlowSolution pf_;
    std::vector<Device> devices_;
    std::vector<Complex> v_;
    std::vector<Complex> i_src_;
    int nx_ = 0;
    bool has_gfl_ = false;
};

}  // namespace gs

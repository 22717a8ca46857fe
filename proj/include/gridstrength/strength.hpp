#pragma once

#include <array>
#include <vector>

#include "gridstrength/deltacalc.hpp"
#include "gridstrength/system.hpp"

namespace gs {

// Everything the strength formulas need from both sides of an event: bus
// voltages, first/second-order complex frequencies, and the (continuous)
// device states at the instant.
struct Snapshot {
    std::vector<int> bus_ids;                 // case bus order
    std::vector<double> v_minus, v_plus;      // magnitudes
    std::vector<double> th_minus, th_plus;    // rad
    std::vector<Complex> eta1_minus, eta1_plus;  // rho + j(omega-omega0)
    std::vector<Complex> eta2_minus, eta2_plus;  // sigma + j gamma
    std::vector<Device> devices;              // states at the instant

    int n() const { return int(v_minus.size()); }
    int index_of(int bus_id) const {
        for (size_t k = 0; k < bus_ids.size(); ++k)
            if (bus_ids[k] == bus_id) return int(k);
        throw Error("unknown bus id " + std::to_string(bus_id));
    }
    Jump<double> v(int k) const { return {v_minus[k], v_plus[k]}; }
    Jump<double> theta(int k) const { return {th_minus[k], th_plus[k]}; }
    Complex vbar_minus(int k) const { return std::polar(v_minus[k], th_minus[k]); }
    Complex vbar_plus(int k) const { return std::polar(v_plus[k], th_plus[k]); }
    Complex vbar_mean(int k) const { return 0.5 * (vbar_minus(k) + vbar_plus(k)); }
    Complex rot_mean(int k) const {
        return 0.5 * (std::polar(1.0, th_minus[k]) + std::polar(1.0, th_plus[k]));
    }
};

struct BlockSet {
    BlockMatrix a, a1, a2, b1, b2, c2;
};

// Sums per-device blocks into bus-diagonal matrices; empty buses are zero.
BlockSet assemble_device_blocks(const std::vector<Device>& devices, const Snapshot& snap, int n);

struct ZeqChain {
    BlockMatrix zeq, zeq1, zeq2;
};

// Z_eq   = (I - Z A)^-1 Z
// Z_eq'  = (I - Z B')^-1 Z A'  Z_eq
// Z_eq'' = (I - Z C'')^-1 Z A'' Z_eq + Z B'' Z_eq'
// Residual (I - Z A) Z_eq = Z checked to 1e-10.
ZeqChain zeq_chain(const BlockMatrix& z, const BlockSet& blocks);

// Per-bus twelve indicators are the diagonal blocks of S, S', S''.
struct StrengthResult {
    BlockMatrix s, s1, s2;
    std::array<Mat2, 3> indicators(int bus_index) const {
        return {s.block(bus_index, bus_index), s1.block(bus_index, bus_index),
                s2.block(bus_index, bus_index)};
    }
};

// S   = mean(v)^-1 (mean e^{j th})^-1 Z_eq   e^{j th+}   (scalar magnitude mean)
// S'  = Vm^-1 (Z_eq'  - mean(eta')  Z_eq) e^{j th+}      (Vm = Mat2 of mean voltage vector)
// S'' = Vm^-1 (Z_eq'' - mean(eta'') Z_eq) e^{j th+}
StrengthResult strength_matrices(const Snapshot& snap, const ZeqChain& chain);

// Freezes device states and re-solves the algebraic system with the step
// draw applied; the injection is oriented by the post-event voltage angle,
// found by a damped fixed point (0.8, max 50, tol 1e-12 on theta+). Fills
// both sides' complex frequencies via the exact resolvent solves.
Snapshot solve_post_state(System& sys, const Disturbance& dist);
Snapshot solve_post_state(const SystemCase& c, const Disturbance& dist);

struct JumpPrediction {
    ClarkeVec dv_vtheta;  // [Dv/mean(v), 2 tan(Dtheta/2)]
    ClarkeVec deta1;      // [Drho, Domega]
    ClarkeVec deta2;      // [Dsigma, Dgamma]
};

// Applies the indicator blocks at `bus_index` to a user disturbance
// (load-convention draw; the framework injection is its negative).
JumpPrediction predict_jump(const StrengthResult& r, int bus_index, ClarkeVec di_pq);

// Full cross-bus prediction for a draw at one bus.
std::vector<JumpPrediction> predict_all(const StrengthResult& r, int bus_index, ClarkeVec di_pq);

// Converts the parametrized jump back to absolute Dv, Dtheta using the
// pre-event magnitude: Dv = r1 v- / (1 - r1/2), Dtheta = 2 atan(r2/2).
struct AbsoluteJump {
    double dv = 0.0;
    double dtheta = 0.0;
};
AbsoluteJump absolute_jump(ClarkeVec dv_vtheta, double v_minus);

struct BusIndicators {
    int bus_id = 0;
    Mat2 s0, s1, s2;
};

struct IndicatorTable {
    std::vector<BusIndicators> raw;
    std::vector<BusIndicators> normalized;  // entry / max|entry| per order
    // rankings[order][entry (row-major 0..3)] = bus ids, descending |value|
    std::array<std::array<std::vector<int>, 4>, 3> rankings;
    std::array<double, 3> order_max{};      // the normalizers
};

IndicatorTable normalize_report(std::vector<BusIndicators> rows);

}  // namespace gs

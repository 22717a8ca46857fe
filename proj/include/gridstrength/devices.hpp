#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gridstrength/algebra.hpp"
#include "gridstrength/network.hpp"

namespace gs {

struct Snapshot;  // strength.hpp

// The six 2x2 blocks a device contributes to the strength chain:
// Di_dev   = a  Dv
// Di'_dev  = a1 Dv + b1 Dv'
// Di''_dev = a2 Dv + b2 Dv' + c2 Dv''
struct StrengthBlocks {
    Mat2 a, a1, b1, a2, b2, c2;
};

// Classical machine: swing equation behind transient reactance, constant
// EMF magnitude. States delta, omega_r (pu).
struct SynMachineState {
    int bus = 0;
    double m = 0.0;        // 2H
    double damping = 0.0;
    double ra = 0.0;
    double xd1 = 0.0;
    double omega_b = 0.0;  // rad/s
    double e1q = 0.0;      // internal EMF magnitude
    double pm = 0.0;       // mechanical power
    // states
    double delta = 0.0;
    double omega_r = 1.0;

    Complex emf() const { return std::polar(e1q, delta); }
    Complex zs() const { return {ra, xd1}; }  // stator impedance
};

// Grid-following converter: first-order current tracking in the bus-voltage
// frame, ideal synchronization, droop on filtered frequency. States i (dq),
// x_p (droop filter output, adds to the active reference).
struct GflState {
    int bus = 0;
    double t_i = 0.02;       // current tracking time constant, s
    double t_f = 0.1;        // droop filter time constant, s
    double droop = 0.05;     // R; droop gain is 1/R
    double omega_ref = 0.0;  // rad/s, relative to the fundamental
    Complex s_ref0;          // power set point
    // states
    ClarkeVec i;             // converter current, bus-voltage frame
    double xp = 0.0;

    Complex s_ref() const { return s_ref0 + Complex(xp, 0.0); }
    Complex i_ref(double v_mag) const { return std::conj(s_ref()) / v_mag; }
};

// Constant-impedance load. Stateless; `embedded` means its admittance lives
// inside the network matrix (embed_zloads), so current and blocks are zero.
struct ZLoadState {
    int bus = 0;
    Complex z{0.0, 0.0};
    bool embedded = false;
};

using DeviceState = std::variant<SynMachineState, GflState, ZLoadState>;

struct Device {
    std::string id;
    DeviceState state;

    int bus() const;
    DeviceType type() const;
    int n_states() const;  // SM 2, GFL 3, ZLoad 0
};

// Builds initialized devices from the case and a converged power flow; the
// residual share of generation at each bus (after subtracting zload and
// PQ-converter set points) goes to the machines. Checks that every device's
// DAE residual vanishes at t = 0.
std::vector<Device> init_devices(const SystemCase& c, const PowerFlowSolution& pf);

// State derivatives. omega_bus is the bus frequency relative to the
// fundamental (rad/s); only the GFL droop reads it.
void device_rhs(const DeviceState& st, Complex vbar, double omega_bus, std::span<double> out);

// Injected current at the terminal.
Complex device_current(const DeviceState& st, Complex vbar);

// d(i_dev)/d(vbar) at fixed device states, as a real 2x2 block.
Mat2 device_current_jacobian(const DeviceState& st, Complex vbar);

// Linear-in-v-derivative form of the current derivative at a point:
// i'_dev = drive + feedthrough * v' (exact; not a small-jump approximation).
struct CurrentRate {
    Complex drive;
    Mat2 feedthrough;
};
CurrentRate device_current_rate(const DeviceState& st, Complex vbar);

// i_dev-dot evaluated with a caller-supplied v-dot.
Complex device_current_rate_at(const DeviceState& st, Complex vbar, Complex vdot);

// Same decomposition one order up: i''_dev = drive + feedthrough * v''.
// Needs the bus complex frequency eta' = rho + j(omega - omega0).
CurrentRate device_current_accel(const DeviceState& st, Complex vbar, Complex eta1);

// Magnitude of the current-rate jump contribution the converter's first-order
// blocks leave out (the part proportional to the device current jump and to
// the mean complex frequency). Near equilibrium it vanishes with the distance
// from the set point, which is what justifies the compact block form; this
// hook lets validation quantify it on a concrete snapshot.
double gfl_dropped_term_magnitude(const GflState& st, const Snapshot& snap);

// Strength blocks on a pre/post snapshot.
StrengthBlocks sm_blocks(const SynMachineState& st, const Snapshot& snap);
StrengthBlocks gfl_blocks(const GflState& st, const Snapshot& snap);
StrengthBlocks zload_blocks(const ZLoadState& st);
StrengthBlocks device_blocks(const Device& d, const Snapshot& snap);

}  // namespace gs

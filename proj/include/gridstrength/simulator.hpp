#pragma once

#include <vector>

#include "gridstrength/strength.hpp"
#include "gridstrength/system.hpp"

namespace gs {

// Step current draw applied at time t (persists afterwards).
struct Event {
    double t = 0.0;
    Disturbance dist;
};

// Columnar record of a run. Event instants appear as two rows with the same
// timestamp: the (-) side first, then the (+) side after the jump.
struct Trajectory {
    std::vector<double> t;
    // [row][bus]
    std::vector<std::vector<double>> v, theta, rho, omega, sigma, gamma;
    // [row][state index]
    std::vector<std::vector<double>> states;
    std::vector<size_t> event_rows;  // index of each (-) row
    std::vector<double> step_residuals;  // max algebraic residual per accepted row

    size_t rows() const { return t.size(); }
    int buses() const { return t.empty() ? 0 : int(v[0].size()); }
};

// Implicit trapezoidal integration with per-step Newton (tol 1e-10, max 20,
// FD chord Jacobian; rebuilt once on slow convergence). Events freeze states
// and re-solve the algebraics through the same fixed point as
// solve_post_state. dt default 1e-3 s.
Trajectory simulate(const SystemCase& c, const std::vector<Event>& events, double t_end,
                    double dt = 1e-3);
Trajectory simulate(System& sys, const std::vector<Event>& events, double t_end, double dt = 1e-3);

// Accessors for a recorded row (the stored values are the exact resolvent
// computations, not numerical differentiation).
std::vector<ComplexFrequency> bus_complex_frequency(const Trajectory& traj, size_t row);
std::vector<ComplexFrequency2> bus_second_order_cf(const Trajectory& traj, size_t row);

struct MeasuredJump {
    ClarkeVec dv_vtheta;
    ClarkeVec deta1;
    ClarkeVec deta2;
};

// Per-bus measured jumps at a recorded event; throws EventNotFound.
std::vector<MeasuredJump> measure_jump(const Trajectory& traj, double t_event);

// One compared quantity in the validation report.
struct ValidationRow {
    std::string quantity;
    double predicted = 0.0;
    double measured = 0.0;
    double error = 0.0;  // predicted - measured
};

struct ValidationReport {
    int bus_id = 0;
    Disturbance dist;
    std::vector<ValidationRow> jump_rows;  // Dv, Dtheta, Drho, Domega, Dsigma, Dgamma
    std::vector<ValidationRow> proc_rows;  // gamma+, sigma+ vs post-event slopes
    double max_step_residual = 0.0;
    double predicted_dv = 0.0, predicted_dtheta = 0.0;  // absolute units
    // per converter, magnitude of the first-order term its blocks leave out
    std::vector<std::pair<std::string, double>> gfl_dropped_terms;

    double max_jump_error() const;
};

// Analytical path (solve_post_state + predict_jump) against the simulation
// path (simulate + measure_jump), plus initial rate-of-change slopes.
ValidationReport validate(const SystemCase& c, const Disturbance& dist, double t_event = 1.0,
                          double t_end = 5.0, double dt = 1e-3);

}  // namespace gs

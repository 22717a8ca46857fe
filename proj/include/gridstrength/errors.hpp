#pragma once

#include <stdexcept>
#include <string>

namespace gs {

// Base of everything thrown on purpose. Exit-code mapping in the CLI:
// ParseError -> 2, NumericalError -> 3, ConvergenceError -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    std::string path;  // JSON-pointer-ish location of the offending field
    ParseError(std::string where, const std::string& reason)
        : Error(where.empty() ? reason : where + ": " + reason), path(std::move(where)) {}
};

struct NumericalError : Error {
    using Error::Error;
};

struct SingularMatrix : NumericalError {
    double condition_estimate;
    explicit SingularMatrix(double cond)
        : NumericalError("singular matrix (condition estimate " + std::to_string(cond) + ")"),
          condition_estimate(cond) {}
};

// Bare network admittance has no shunt path to ground; see embed_zloads.
struct SingularNetwork : NumericalError {
    SingularNetwork()
        : NumericalError(
              "network admittance matrix is singular (no shunt path to ground); "
              "fold constant-impedance loads into it with the case flag embed_zloads") {}
};

struct SingularResolvent : NumericalError {
    int order;
    explicit SingularResolvent(int ord)
        : NumericalError("resolvent factor singular at strength order " + std::to_string(ord)),
          order(ord) {}
};

struct SingularAlgebraicSystem : NumericalError {
    SingularAlgebraicSystem() : NumericalError("network algebraic system is singular") {}
};

struct DegenerateDenominator : NumericalError {
    DegenerateDenominator() : NumericalError("quotient jump rule needs g+ * g- > 0") {}
};

struct JumpTooLarge : NumericalError {
    JumpTooLarge() : NumericalError("angle jump magnitude must be below pi") {}
};

struct DegenerateMagnitude : NumericalError {
    DegenerateMagnitude() : NumericalError("mean magnitude vanishes") {}
};

struct DegenerateVoltage : NumericalError {
    DegenerateVoltage() : NumericalError("bus voltage (or its mean) vanishes") {}
};

struct InconsistentPowerFlow : NumericalError {
    double residual;
    explicit InconsistentPowerFlow(double res)
        : NumericalError("device initialization leaves DAE residual " + std::to_string(res)),
          residual(res) {}
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct NonConvergence : ConvergenceError {
    int iterations;
    double residual;
    NonConvergence(int iters, double res)
        : ConvergenceError("no convergence after " + std::to_string(iters) +
                           " iterations (residual " + std::to_string(res) + ")"),
          iterations(iters), residual(res) {}
};

struct FixedPointDivergence : ConvergenceError {
    FixedPointDivergence() : ConvergenceError("post-event angle fixed point did not converge") {}
};

struct NewtonFailure : ConvergenceError {
    double t;
    explicit NewtonFailure(double at)
        : ConvergenceError("integration step Newton failed at t = " + std::to_string(at)), t(at) {}
};

struct EventNotFound : Error {
    explicit EventNotFound(double t)
        : Error("no recorded event at t = " + std::to_string(t)) {}
};

}  // namespace gs

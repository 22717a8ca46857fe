#include "gridstrength/deltacalc.hpp"

namespace gs {

double geom_mean(const Jump<double>& f) {
    const double p = f.plus * f.minus;
    if (p < 0.0) throw DegenerateDenominator();
    return std::sqrt(p);
}

double delta_product(const Jump<double>& f, const Jump<double>& g) {
    return f.delta() * g.arith_mean() + f.arith_mean() * g.delta();
}

double delta_quotient(const Jump<double>& f, const Jump<double>& g) {
    const double ghat2 = g.plus * g.minus;
    if (!(ghat2 > 0.0)) throw DegenerateDenominator();
    return (f.delta() * g.arith_mean() - f.arith_mean() * g.delta()) / ghat2;
}

ClarkeVec delta_cexp(const Jump<double>& f) {
    const double df = f.delta();
    if (!(std::abs(df) < M_PI)) throw JumpTooLarge();
    // sin form: 2j sin(Df/2) e^{j mean}
    const Complex sin_form =
        Complex(0.0, 2.0 * std::sin(0.5 * df)) * std::polar(1.0, f.arith_mean());
    // tan form, tilde taken over the exponentials themselves
    const Complex exp_mean = 0.5 * (std::polar(1.0, f.plus) + std::polar(1.0, f.minus));
    const Complex tan_form = exp_mean * Complex(0.0, 2.0 * std::tan(0.5 * df));
    if (std::abs(sin_form - tan_form) > 1e-12)
        throw NumericalError("exponential jump closed forms disagree");
    return ClarkeVec(sin_form);
}

ClarkeVec delta_clarke(const Jump<double>& v, const Jump<double>& theta) {
    const double vm = v.arith_mean();
    if (vm == 0.0) throw DegenerateMagnitude();
    const double dth = theta.delta();
    if (!(std::abs(dth) < M_PI)) throw JumpTooLarge();
    const Complex exp_mean = 0.5 * (std::polar(1.0, theta.plus) + std::polar(1.0, theta.minus));
    const Complex factor(v.delta() / vm, 2.0 * std::tan(0.5 * dth));
    return ClarkeVec(vm * exp_mean * factor);
}

ClarkeVec delta_park(const Jump<ClarkeVec>& i_dq, const Jump<double>& theta_dq) {
    const double dth = theta_dq.delta();
    if (!(std::abs(dth) < M_PI)) throw JumpTooLarge();
    const Complex exp_mean =
        0.5 * (std::polar(1.0, theta_dq.plus) + std::polar(1.0, theta_dq.minus));
    const Complex di = i_dq.delta().to_complex();
    const Complex im = i_dq.arith_mean().to_complex();
    return ClarkeVec(exp_mean * (di + im * Complex(0.0, 2.0 * std::tan(0.5 * dth))));
}

}  // namespace gs

#pragma once

#include "gridstrength/algebra.hpp"
#include "gridstrength/errors.hpp"

namespace gs {

// One-sided pair across a discrete event: f(t-) and f(t+).
template <class T>
struct Jump {
    T minus{};
    T plus{};

    T delta() const { return plus - minus; }
    T arith_mean() const { return (plus + minus) * 0.5; }
};

// Geometric mean; scalar-only, needs plus*minus >= 0.
double geom_mean(const Jump<double>& f);

// Jump of a product: Delta(fg) = Delta(f)*mean(g) + mean(f)*Delta(g), exact.
double delta_product(const Jump<double>& f, const Jump<double>& g);

// Jump of a quotient: (Delta(f)*mean(g) - mean(f)*Delta(g)) / gmean(g)^2,
// exact; requires g+ * g- > 0.
double delta_quotient(const Jump<double>& f, const Jump<double>& g);

// Jump of a complex exponential: e^{jf+} - e^{jf-}. Computed with the
// singularity-free sin form 2j sin(Df/2) e^{j mean(f)}; the tan form
// (mean of the exponentials) * 2j tan(Df/2) is evaluated as a cross-check.
// Requires |Df| < pi.
ClarkeVec delta_cexp(const Jump<double>& f);

// Jump of v e^{j theta}: mean(v) * (mean of e^{j theta}) *
// (Dv/mean(v) + 2j tan(Dtheta/2)); exact. Requires mean(v) != 0, |Dtheta| < pi.
ClarkeVec delta_clarke(const Jump<double>& v, const Jump<double>& theta);

// Jump of a rotating-frame current in the original frame:
// (mean of e^{j theta_dq}) * (Di_dq + mean(i_dq) * 2j tan(Dtheta_dq/2)).
ClarkeVec delta_park(const Jump<ClarkeVec>& i_dq, const Jump<double>& theta_dq);

}  // namespace gs

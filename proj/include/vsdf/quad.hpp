#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace vsdf {

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance tol.
///
/// Classic recursive bisection with the 15-point error estimate; depth is
/// capped so a pathological integrand fails loudly instead of hanging, and
/// min_depth levels of refinement are forced before the error estimate is
/// trusted (guards against integrands supported between coarse samples).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 60, int min_depth = 0);

/// Integral of f over (-inf, b], truncated at 'cut' (integrands here decay at
/// least like e^{3v} toward -inf, so the truncation error is ~e^{3*cut}).
double integral_to(const std::function<double(double)>& f, double b, double tol,
                   double cut = -40.0);

}  // namespace vsdf

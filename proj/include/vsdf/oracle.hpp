#pragma once

#include <functional>
#include <vector>

#include "vsdf/grid.hpp"
#include "vsdf/profile.hpp"

namespace vsdf {

/// Adaptive quadrature of ∫_{-inf}^{w} f0(rho) e^{3 rho} d rho, truncated at
/// rho = -40 (the discarded tail is below the double-precision floor for any
/// bounded f0).  Absolute tolerance tol, interpreted relative to the natural
/// e^{3w} scale of the integrand.
double moment_integral(const std::function<double(double)>& f0, double w, double tol = 1e-12);

/// Closed-form |k| = 1 spectral density slice:
///   Gamma(v,w) = 2 pi (B(v)-B(w)) / B'(w)^2 * e^{v+w} * 1_{v<w}
///                * { f0(w) - e^{-w} D(w)/B'(w) * moment_integral(f0, w) }.
/// Returns 0 for v >= w; errors unless |k| == 1.
double k1_gamma(const VortexProfile& p, int k, double v, double w,
                const std::function<double(double)>& f0);

/// Whole-column evaluation at fixed w (single moment-integral computation).
std::vector<double> k1_gamma_column(const VortexProfile& p, int k, const Grid& g, double w,
                                    const std::function<double(double)>& f0);

}  // namespace vsdf

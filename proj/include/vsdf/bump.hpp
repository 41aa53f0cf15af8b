#pragma once

namespace vsdf {

/// Normalized C^infty bump: psi(x) = N exp(-1/(1-x^2)) on (-1,1), 0 outside,
/// with N chosen so the mass is 1.  Used as the mollifier for every cutoff.
double bump(double x);

/// Derivative psi'(x).
double bump_deriv(double x);

/// CDF of the bump: int_{-1}^{x} psi.  Monotone, 0 for x<=-1, 1 for x>=1.
/// Evaluated from a cubic-Hermite table (exact nodal derivatives = psi).
double bump_cdf(double x);

/// Smoothed step rising from 0 to 1 across [c-delta, c+delta].
inline double smoothstep(double x, double c, double delta) {
  return bump_cdf((x - c) / delta);
}

// -- The three cutoff profiles used by the spectral-density pipeline. -------
// phi0:      1 on (-inf,-2], 0 on [-1, inf)        (left data-splitting cutoff)
// phi_star:  1 on [-2,2],    0 outside (-4,4)      (window / partition cutoff)
// phi_star2: 1 on [-4,4],    0 outside (-5,5)      (wide envelope cutoff)

inline double phi0(double v) { return 1.0 - smoothstep(v, -1.5, 0.5); }
inline double phi0_d1(double v) { return -2.0 * bump(2.0 * (v + 1.5)); }
inline double phi0_d2(double v) { return -4.0 * bump_deriv(2.0 * (v + 1.5)); }

inline double phi_star(double v) { return bump_cdf(v + 3.0) - bump_cdf(v - 3.0); }
inline double phi_star2(double v) {
  return bump_cdf(2.0 * (v + 4.5)) - bump_cdf(2.0 * (v - 4.5));
}

}  // namespace vsdf

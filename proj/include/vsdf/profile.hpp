#pragma once

#include <cstddef>
#include <vector>

#include "vsdf/grid.hpp"

namespace vsdf {

/// Radially decreasing background vortex and its log-variable coefficients.
///
/// The default instance is Omega(r) = (r^2+2)^{-3}, for which everything has
/// a closed form:
///   b(r) = (r^2+4) / (16 (r^2+2)^2),          U(r) = r b(r),
///   d(r) = Omega'(r)/r = -6 / (r^2+2)^4,
///   B(v) = b(e^v), D(v) = d(e^v),
///   B'(v) = -x (x+6) / (8 (x+2)^3),          x := e^{2v},
///   B''(v) = x (x^2+8x-12) / (4 (x+2)^4).
/// Alternative profiles can be supplied as a table of (r, Omega) samples; b is
/// then built by quadrature and derivatives come from a cubic spline in
/// v = log r.  All admissibility requirements (positivity, monotone decay,
/// bracket bounds) are checked by verify_admissibility().
class VortexProfile {
 public:
  /// The closed-form default vortex Omega(r) = (r^2+2)^{-3}.
  static VortexProfile default_profile();

  /// Tabulated vortex from strictly increasing r > 0 and Omega samples.
  /// Queries outside [r_front, r_back] are a domain error; the quadrature
  /// for b closes the integral below r_front with Omega ~ const there.
  static VortexProfile from_table(const std::vector<double>& r,
                                  const std::vector<double>& omega);

  bool closed_form() const { return closed_; }

  // -- r-variable quantities -------------------------------------------------
  double omega(double r) const;        ///< vorticity Omega(r)
  double omega_deriv(double r) const;  ///< Omega'(r)
  double b(double r) const;            ///< angular velocity U(r)/r
  double U(double r) const;            ///< velocity magnitude r b(r)
  double d(double r) const;            ///< Omega'(r)/r

  // -- v = log r variable quantities ------------------------------------------
  double B(double v) const;    ///< b(e^v)
  double Bp(double v) const;   ///< dB/dv  (equals Omega(e^v) - 2 B(v) for any profile)
  double Bpp(double v) const;  ///< d^2B/dv^2
  double D(double v) const;    ///< d(e^v)

  /// B(v) - B(w) evaluated without cancellation.  For w far below 0 the
  /// difference is ~e^{-2|w|} while B itself is ~1/16, so the naive
  /// subtraction loses all digits; the closed-form profile factors the
  /// difference exactly.  Tabulated profiles fall back to the naive form.
  double B_diff(double v, double w) const;

  /// The singular quotient e^{2v} D(v) / (B(v) - B(w)), built on B_diff.
  /// For w -> -inf with v fixed negative this approaches the plateau value 8.
  double quotient(double v, double w) const;

  double b0() const { return b(0.0); }  ///< top of the spectral band

  /// Limit constant of d(r)·(r^2+2)^4 as r->0 (exactly -6 for the default).
  double c_star() const { return c_star_; }
  /// Smallest constant with Omega(r)·(r^2+2)^3 <= C_star on the working range.
  double C_star() const { return C_star_; }

 private:
  VortexProfile() = default;

  bool closed_ = true;
  double c_star_ = -6.0;
  double C_star_ = 1.0;

  // Tabulated state (unused for the closed form): cubic spline of Omega over
  // the v-nodes, plus the cumulative integral I(v) = int_{-inf}^v e^{2u} Omega du
  // so that b(e^v) = e^{-2v} I(v).
  std::vector<double> tv_;       // v nodes
  std::vector<double> tom_;      // Omega samples
  std::vector<double> tom_d2_;   // spline second derivatives
  std::vector<double> tI_;       // cumulative integral at nodes

  double spline_eval(double v, int deriv) const;  // deriv in {0,1}
  void build_table();
};

/// e^{2v} D(v) / (B(v) - B(w)) for w < v < 0 with v - w >= 2 (the long-range
/// plateau regime; approaches 8 as w -> -inf).  Argument checks are strict.
double longrange_plateau(const VortexProfile& p, double v, double w);

/// Report of the background-admissibility checks on an evaluation grid.
struct AdmissibilityReport {
  bool positive = false;           ///< Omega > 0 at all nodes
  bool decreasing = false;         ///< Omega' < 0 at all nodes
  double C_star_measured = 0.0;    ///< sup Omega * (r^2+2)^3
  double identity_residual = 0.0;  ///< max |2B' + B'' - e^{2v} D|
  double envelope_ratio = 0.0;     ///< max over j<=j_max of derivative-envelope ratios
  int j_max = 8;
  bool pass = false;
};

/// Verify positivity, monotone decay, the bracket bound, the coefficient
/// identity 2B' + B'' = e^{2v} D, and the near-origin derivative envelopes
/// |d^j/dv^j (D(v) - c_* (e^{2v}+2)^{-4})| <= C^{j+1} (j!)^2 e^{2v} / (e^{2v}+2)^{5}
/// for j <= j_max (a finite slice of the admissibility family).
AdmissibilityReport verify_admissibility(const VortexProfile& p, const Grid& g, int j_max = 8);

}  // namespace vsdf

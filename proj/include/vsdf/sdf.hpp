#pragma once

#include <limits>
#include <string>
#include <vector>

#include "vsdf/grid.hpp"
#include "vsdf/profile.hpp"
#include "vsdf/tridiag.hpp"

namespace vsdf {

/// Mode-k right-hand-side data for the resolvent solves.
///
/// F0 subtracts the sigma-carried homogeneous piece from f0; modes with
/// |k| = 1 are projected to zero e^{3v}-weighted integral.  The tail slopes
/// of log|F0| are fitted on [v_min,-5] and [5,v_max] and the data is rejected
/// if it decays slower than the admissible envelope.
struct InitialData {
  int k = 1;
  int k_dagger = 5;
  Grid grid;
  std::vector<double> f0;   // possibly projected (|k| = 1)
  std::vector<double> F0;   // f0 - (sigma/c_*) D e^{|k|v} Phi_0
  double sigma_k = 0.0;
  double M_dagger = 0.0;        // max windowed weighted sup of F0
  double tail_slope_left = 0.0;   // fitted d log|F0| / dv on the core side
  double tail_slope_right = 0.0;  // fitted slope on the far side
};

InitialData build_initial_data(const VortexProfile& p, int k, const Grid& g,
                               const std::vector<double>& raw_f0, double sigma_k,
                               int k_dagger = 5);

/// One resolvent solve at fixed (k, iota, epsilon, w): complex grid functions
/// gamma (the regularized unknown) and pi = gamma + (sigma/c_*) e^{|k|v} Phi_0.
///
/// The singular coefficient and right-hand side are cell-averaged through the
/// exact antiderivative A * log(B(v)-B(w)+i*iota*eps), which integrates the
/// near-resonance Lorentzian exactly however small epsilon is relative to the
/// grid; the solver therefore stays accurate below the pointwise-sampling
/// resolution limit epsilon ~ 4h|B'(w)| (under_resolved records when that
/// regime is entered).
struct SpectralSlice {
  int k = 1;
  int iota = +1;
  double w = 0.0;       // snapped to the grid
  double epsilon = 0.0;
  Grid grid;
  std::vector<cpx> gamma, pi;
  std::vector<cpx> qbar;      // cell-averaged singular coefficient (diagonal)
  std::vector<cpx> qlo, qup;  // sub/superdiagonal of the covariance correction
  std::vector<cpx> rhs;   // cell-averaged source (F0 part) plus sigma source
  std::vector<double> esrc;  // (sigma/c_*) e^{|k|v} Phi_0 samples
  double lam_lo = 0.0, lam_hi = 0.0;  // Robin decay rates used
  bool under_resolved = false;

  /// Max-norm residual of the discrete resolvent equation for pi (the
  /// original untransformed form), evaluated with the solver's own operator.
  double residual_b13() const;
};

SpectralSlice solve_pi(const VortexProfile& p, int k, int iota, double epsilon, double w,
                       const InitialData& data);

/// The vanishing-epsilon limit 2*Im Gamma^+ by pointwise Romberg
/// extrapolation over the geometric schedule eps_j = eps0 * 4^{-j} *
/// e^{-2|w|} for j = 0..levels, with the convergence order measured from
/// successive differences.  theta is the same sample vector relabeled on the
/// shifted grid (v -> v - w); trace is the extrapolated limit of
/// Re Gamma^+ at the resonant node (the value the jump identity needs).
struct LimitSlice {
  int k = 1;
  double w = 0.0;  // snapped
  Grid grid;        // grid of gamma_limit
  Grid theta_grid;  // shifted grid of theta
  std::vector<double> gamma_limit, theta;
  double trace = 0.0;
  double extrapolation_order = 0.0;
  bool flagged = false;     // non-monotone differences: coarsest-eps returned
  std::string warning;
};

LimitSlice limit_gamma(const VortexProfile& p, int k, double w, const InitialData& data,
                       double eps0 = 1e-3, int levels = 3, int threads = 0);

/// Relative residual of the derivative-jump identity at the origin of theta:
/// the one-sided slopes are extrapolated from quadratic fits through the
/// nodes 2..4 cells off the origin on each side.
double jump_check(const VortexProfile& p, const LimitSlice& slice, const InitialData& data);

/// Max residual of the principal-value equation over |v| >= 4h, normalized
/// by the sup of |theta|.  Within |v| <= 1.5 the known row defect of the
/// layer's log-bearing components (strength from the trace and theta(0)) is
/// subtracted, so the measurement sees only the smooth remainder's error.
double pv_residual(const VortexProfile& p, const LimitSlice& slice, const InitialData& data);

/// Decay exponent of the limit profile over the depletion window [w+2, -2]
/// (override with lo/hi, in the unshifted variable): the negated
/// least-squares slope of log|Gamma_k(u, w)| against u, so a profile falling
/// off away from the layer yields a positive exponent.  Requires w <= -10
/// and a window at least 4 units long.
double depletion_fit(const LimitSlice& slice, double lo = std::numeric_limits<double>::quiet_NaN(),
                     double hi = std::numeric_limits<double>::quiet_NaN());

}  // namespace vsdf

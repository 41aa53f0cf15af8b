#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vsdf/grid.hpp"
#include "vsdf/profile.hpp"

namespace vsdf {

enum class PotentialTag { none, step, longrange };

/// Tabulated Green's kernel of k^2 - d^2/dv^2 + V on a uniform grid,
/// G(i,j) ~ G(v_i, rho_j).  Immutable once built.
struct GreenKernel {
  int k = 1;
  PotentialTag tag = PotentialTag::none;
  double w = 0.0;       // longrange: well location
  double A = 0.0;       // step: well [A, Ap]
  double Ap = 0.0;
  Grid grid;
  Eigen::MatrixXd G;

  /// Interval-overlap length entering the decay weight for this kernel —
  /// the overlap of [v,rho] with the support of the potential (clipped at 0):
  /// none -> 0, step -> |[v,rho] ∩ [A,Ap]|, longrange -> |[v,rho] ∩ [w+1,0]|.
  double overlap(double v, double rho) const;
};

struct GreenBoundReport {
  double value_ratio = 0.0;  ///< sup |k| G / varpi
  double deriv_ratio = 0.0;  ///< sup |dG/dv| / varpi  (centered, off-diagonal)
  double value_v = 0.0, value_rho = 0.0;
  double deriv_v = 0.0, deriv_rho = 0.0;
};

/// Free kernel e^{-|k||v-rho|}/(2|k|) of k^2 - d^2/dv^2.  k must be nonzero.
double free_green(int k, double v, double rho);

/// The same kernel in the radial variable: (rho_> / 2|k|) (r_< / r_>)^{|k|}
/// for the operator -d^2/dr^2 - r^{-1} d/dr + k^2/r^2 with a delta at rho.
double free_green_r(int k, double r, double rho);

/// Exact kernel of k^2 - d^2/dv^2 + 8*indicator([A,Ap]): piecewise-exponential
/// closed form assembled from the matching linear system (continuity at each
/// breakpoint, unit derivative drop at rho, decay at both infinities).
double step_green(int k, double A, double Ap, double v, double rho);

/// One column of the step kernel on a grid (single coefficient solve).
std::vector<double> step_green_column(int k, double A, double Ap, const Grid& g, double rho);

/// Long-range potential: the singular quotient e^{2v}D/(B(v)-B(w)) times a
/// mollified indicator of [w+2, inf); identically zero for v <= w+1 and
/// nonnegative everywhere.  Defined for w <= -5 only.
double potential_Vw(const VortexProfile& p, double w, double v);

/// Discrete symmetric kernel of k^2 - d^2/dv^2 + V(v) with Robin truncation
/// dG/dv = +lam_left G at the bottom and -lam_right G at the top: one
/// tridiagonal solve per column, parallelized; exactly symmetric by assembly.
Eigen::MatrixXd kernel_from_potential(int k, const Grid& g, const std::vector<double>& V,
                                      double lam_left, double lam_right, int threads = 0);

GreenKernel free_green_kernel(int k, const Grid& g);
GreenKernel step_green_kernel(int k, double A, double Ap, const Grid& g);

/// Kernel for the mollified long-range potential at well location w <= -5.
/// The grid must contain [w-5, 5].  Robin rates are sqrt(k^2 + V(boundary)).
GreenKernel longrange_green(const VortexProfile& p, int k, double w, const Grid& g,
                            int threads = 0);

/// Measure the decay-weight ratios sup |k| G / varpi and sup |dG/dv| / varpi
/// with varpi = exp(-|k||v-rho| - (sqrt(k^2+8)-|k|) * overlap).
GreenBoundReport verify_green_bound(const GreenKernel& kern);

}  // namespace vsdf

#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "vsdf/grid.hpp"

namespace vsdf {

/// Angular wavenumber bundle: the truncation index k† and the derived decay
/// rates used by the weighted estimates.
struct WaveSpec {
  int k = 1;
  int k_dagger = 5;

  WaveSpec() = default;
  WaveSpec(int k_, int k_dagger_ = 5) : k(k_), k_dagger(k_dagger_) {
    if (k == 0) throw std::invalid_argument("WaveSpec: k must be nonzero");
    if (k_dagger < 5) throw std::invalid_argument("WaveSpec: k_dagger must be >= 5");
  }

  int kappa() const { return std::min(std::abs(k), k_dagger); }
  double mu() const { return std::sqrt(double(k) * k + 8.0); }
  double mu_star() const { return (9.0 * mu() + std::abs(k) + 2.0) / 10.0; }
};

/// Length of [min(v,rho), max(v,rho)] ∩ [min(w_star,0), 0]; symmetric in (v,rho).
double overlap_d(double w_star, double v, double rho);

/// Two-point decay weight e^{-k_eff |v-rho| - (mu_{k_eff} - k_eff) d_{w_star}(v,rho)}
/// with mu_{k_eff} = sqrt(k_eff^2 + 8).  Always in (0,1], equal to 1 iff v == rho.
double varpi(int k_eff, double w_star, double v, double rho);

/// Reciprocal weight 1/varpi; submultiplicative through any waypoint sigma.
double zeta(int k_eff, double w_star, double v, double rho);

/// Windowed weighted norm: sup over integer offsets j of
///   ||e^{|k_star||v|} h||_{L2(j,j+2)} + |k|^{-1} ||e^{|k_star||v|} h'||_{L2(j,j+2)}
/// with trapezoidal quadrature and finite-difference derivatives.  Windows are
/// the full-length [j,j+2] intervals contained in the grid; a grid shorter
/// than one window is treated as a single window.  Errors if the grid has
/// fewer than 4 points per window.
double y_norm(const Grid& g, const std::vector<double>& h, int k, double k_star);

/// Windowed-Fourier diagnostic: cut h to [wlo,whi] with a smooth compactly
/// supported factor, take the discrete Fourier transform, and return
///   sum_m e^{2 delta (1 + xi_m^2)^{1/4}} |h_hat_m|^2
/// over the resolvable frequencies xi_m.  Trend monitoring only.
double gevrey_norm_estimate(const Grid& g, const std::vector<double>& h, double delta,
                            double wlo, double whi);

}  // namespace vsdf

#include "vsdf/norms.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "vsdf/bump.hpp"

namespace vsdf {

double overlap_d(double w_star, double v, double rho) {
  double a = std::min(v, rho), b = std::max(v, rho);
  double lo = std::min(w_star, 0.0), hi = 0.0;
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

double varpi(int k_eff, double w_star, double v, double rho) {
  if (k_eff < 1) throw std::invalid_argument("varpi: k_eff must be >= 1");
  double mu = std::sqrt(double(k_eff) * k_eff + 8.0);
  double d = overlap_d(w_star, v, rho);
  return std::exp(-k_eff * std::abs(v - rho) - (mu - k_eff) * d);
}

double zeta(int k_eff, double w_star, double v, double rho) {
  return 1.0 / varpi(k_eff, w_star, v, rho);
}

double y_norm(const Grid& g, const std::vector<double>& h, int k, double k_star) {
  if (h.size() != g.n) throw std::invalid_argument("y_norm: sample size mismatch");
  if (k == 0) throw std::invalid_argument("y_norm: k must be nonzero");
  if (2.0 / g.h + 1.0 < 4.0) throw std::invalid_argument("y_norm: fewer than 4 points per window");

  // finite-difference derivative (centered inside, one-sided at the ends)
  std::vector<double> dh(g.n);
  for (size_t i = 0; i < g.n; ++i) {
    if (i == 0)
      dh[i] = (h[1] - h[0]) / g.h;
    else if (i + 1 == g.n)
      dh[i] = (h[i] - h[i - 1]) / g.h;
    else
      dh[i] = (h[i + 1] - h[i - 1]) / (2.0 * g.h);
  }

  auto window_norms = [&](double a, double b) {
    double s0 = 0.0, s1 = 0.0;
    size_t i0 = g.nearest(a), i1 = g.nearest(b);
    for (size_t i = i0; i <= i1; ++i) {
      double wgt = (i == i0 || i == i1) ? g.h / 2.0 : g.h;
      double e = std::exp(std::abs(k_star) * std::abs(g.v(i)));
      s0 += wgt * e * e * h[i] * h[i];
      s1 += wgt * e * e * dh[i] * dh[i];
    }
    return std::sqrt(s0) + std::sqrt(s1) / std::abs(double(k));
  };

  // full integer windows [j, j+2] inside the grid
  double best = 0.0;
  bool any = false;
  long jlo = (long)std::ceil(g.v0 - 1e-9);
  long jhi = (long)std::floor(g.vmax() - 2.0 + 1e-9);
  for (long j = jlo; j <= jhi; ++j) {
    best = std::max(best, window_norms(double(j), double(j) + 2.0));
    any = true;
  }
  if (!any) best = window_norms(g.v0, g.vmax());
  return best;
}

double gevrey_norm_estimate(const Grid& g, const std::vector<double>& h, double delta,
                            double wlo, double whi) {
  if (h.size() != g.n) throw std::invalid_argument("gevrey_norm_estimate: size mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("gevrey_norm_estimate: delta must be positive");
  if (wlo < g.v0 - 1e-9 || whi > g.vmax() + 1e-9 || !(whi > wlo))
    throw std::invalid_argument("gevrey_norm_estimate: window outside grid");

  size_t i0 = g.nearest(wlo), i1 = g.nearest(whi);
  size_t N = i1 - i0 + 1;
  double len = g.v(i1) - g.v(i0);
  double mid = 0.5 * (g.v(i0) + g.v(i1));

  // cut with the compactly supported factor exp(-1/(1-x^2)) on the window
  std::vector<double> f(N, 0.0);
  for (size_t n = 0; n < N; ++n) {
    double x = 2.0 * (g.v(i0 + n) - mid) / len;
    if (std::abs(x) < 1.0) f[n] = h[i0 + n] * std::exp(-1.0 / (1.0 - x * x));
  }

  // direct DFT over resolvable frequencies xi_m = 2 pi m / len
  double total = 0.0;
  long M = (long)N / 2;
  for (long m = -M; m <= M; ++m) {
    std::complex<double> acc = 0.0;
    for (size_t n = 0; n < N; ++n) {
      double phase = -2.0 * M_PI * double(m) * double(n) / double(N);
      acc += f[n] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    acc /= double(N);
    double xi = 2.0 * M_PI * double(m) / len;
    total += std::exp(2.0 * delta * std::pow(1.0 + xi * xi, 0.25)) * std::norm(acc);
  }
  return total;
}

}  // namespace vsdf

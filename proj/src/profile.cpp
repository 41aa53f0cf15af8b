#include "vsdf/profile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vsdf/tridiag.hpp"

namespace vsdf {

VortexProfile VortexProfile::default_profile() {
  VortexProfile p;
  p.closed_ = true;
  p.c_star_ = -6.0;
  p.C_star_ = 1.0;
  return p;
}

VortexProfile VortexProfile::from_table(const std::vector<double>& r,
                                        const std::vector<double>& omega) {
  if (r.size() < 4 || r.size() != omega.size())
    throw std::invalid_argument("profile table needs >= 4 matching samples");
  VortexProfile p;
  p.closed_ = false;
  p.tv_.resize(r.size());
  for (size_t i = 0; i < r.size(); ++i) {
    if (r[i] <= 0.0) throw std::invalid_argument("profile table radii must be positive");
    if (i && r[i] <= r[i - 1]) throw std::invalid_argument("profile table radii must increase");
    p.tv_[i] = std::log(r[i]);
  }
  p.tom_ = omega;
  p.build_table();
  return p;
}

// ---------------------------------------------------------------------------
// closed-form default: Omega = (r^2+2)^{-3}

static inline double om_closed(double x) {  // x = r^2
  double s = x + 2.0;
  return 1.0 / (s * s * s);
}

double VortexProfile::omega(double r) const {
  if (closed_) return om_closed(r * r);
  return spline_eval(std::log(r), 0);
}

double VortexProfile::omega_deriv(double r) const {
  if (closed_) {
    double s = r * r + 2.0;
    return -6.0 * r / (s * s * s * s);
  }
  // dOmega/dr = (dOmega/dv) / r
  return spline_eval(std::log(r), 1) / r;
}

double VortexProfile::d(double r) const {
  if (closed_) {
    double s = r * r + 2.0;
    return -6.0 / (s * s * s * s);
  }
  return spline_eval(std::log(r), 1) / (r * r);
}

double VortexProfile::b(double r) const { return B(std::log(r)); }
double VortexProfile::U(double r) const { return r * b(r); }

double VortexProfile::B(double v) const {
  if (closed_) {
    double x = std::exp(2.0 * v);
    double s = x + 2.0;
    return (x + 4.0) / (16.0 * s * s);
  }
  // b(e^v) = e^{-2v} * int_{-inf}^{v} e^{2u} Omega(e^u) du
  if (tv_.empty()) throw std::logic_error("profile table not built");
  if (v < tv_.front()) {
    // constant-Omega closure below the table
    return 0.5 * tom_.front();
  }
  if (v > tv_.back()) throw std::domain_error("profile query above tabulated range");
  size_t i = size_t(std::upper_bound(tv_.begin(), tv_.end(), v) - tv_.begin());
  if (i > 0) --i;
  if (i + 1 >= tv_.size()) i = tv_.size() - 2;
  // integrate e^{2u} Omega(u) from tv_[i] to v with Simpson
  const int m = 16;
  double a = tv_[i], hh = (v - a) / (2 * m);
  double acc = 0.0;
  if (hh > 0.0) {
    auto f = [&](double u) { return std::exp(2.0 * u) * spline_eval(u, 0); };
    double s = f(a) + f(v);
    for (int j = 1; j < 2 * m; ++j) s += (j % 2 ? 4.0 : 2.0) * f(a + j * hh);
    acc = s * hh / 3.0;
  }
  return std::exp(-2.0 * v) * (tI_[i] + acc);
}

double VortexProfile::D(double v) const {
  if (closed_) {
    double x = std::exp(2.0 * v);
    double s = x + 2.0;
    return -6.0 / (s * s * s * s);
  }
  if (v < tv_.front()) {
    // below the table Omega is continued as a constant, so D ~ 0 there
    return 0.0;
  }
  return std::exp(-2.0 * v) * spline_eval(v, 1);
}

double VortexProfile::Bp(double v) const {
  if (closed_) {
    double x = std::exp(2.0 * v);
    double s = x + 2.0;
    return -x * (x + 6.0) / (8.0 * s * s * s);
  }
  double om = (v < tv_.front()) ? tom_.front() : spline_eval(v, 0);
  return om - 2.0 * B(v);
}

double VortexProfile::Bpp(double v) const {
  if (closed_) {
    double x = std::exp(2.0 * v);
    double s = x + 2.0;
    return x * (x * x + 8.0 * x - 12.0) / (4.0 * s * s * s * s);
  }
  return std::exp(2.0 * v) * D(v) - 2.0 * Bp(v);
}

double VortexProfile::B_diff(double v, double w) const {
  if (!closed_) return B(v) - B(w);
  // Exact factorization: with x = e^{2v}, y = e^{2w},
  //   B(v) - B(w) = (y - x)(xy + 4x + 4y + 12) / (16 (x+2)^2 (y+2)^2)
  // and y - x = e^{2v} expm1(2(w - v)), which never cancels.
  double x = std::exp(2.0 * v);
  double y = std::exp(2.0 * w);
  double ymx = x * std::expm1(2.0 * (w - v));
  double sx = x + 2.0, sy = y + 2.0;
  return ymx * (x * y + 4.0 * (x + y) + 12.0) / (16.0 * sx * sx * sy * sy);
}

double VortexProfile::quotient(double v, double w) const {
  if (!closed_) {
    double db = B_diff(v, w);
    if (db == 0.0) throw std::domain_error("quotient undefined at equal angular speeds");
    return std::exp(2.0 * v) * D(v) / db;
  }
  // e^{2v} D / (B(v)-B(w)) = -96 x (y+2)^2 / [ (x+2)^2 (y-x)(xy+4x+4y+12) ]
  double x = std::exp(2.0 * v);
  double y = std::exp(2.0 * w);
  double ymx = x * std::expm1(2.0 * (w - v));
  if (ymx == 0.0) throw std::domain_error("quotient undefined at equal angular speeds");
  double sx = x + 2.0, sy = y + 2.0;
  return -96.0 * x * sy * sy / (sx * sx * ymx * (x * y + 4.0 * (x + y) + 12.0));
}

// ---------------------------------------------------------------------------
// tabulated-profile machinery

void VortexProfile::build_table() {
  const size_t n = tv_.size();
  // natural cubic spline second derivatives over the v nodes
  std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0), rhs(n, 0.0);
  for (size_t i = 1; i + 1 < n; ++i) {
    double hm = tv_[i] - tv_[i - 1], hp = tv_[i + 1] - tv_[i];
    lo[i] = hm / 6.0;
    di[i] = (hm + hp) / 3.0;
    up[i] = hp / 6.0;
    rhs[i] = (tom_[i + 1] - tom_[i]) / hp - (tom_[i] - tom_[i - 1]) / hm;
  }
  // natural ends M_0 = M_{n-1} = 0 are the default rows
  solve_tridiag(lo, di, up, rhs);
  tom_d2_ = rhs;

  // cumulative integral of e^{2u} Omega(u): closure below the first node
  // assumes Omega ~ Omega_0 there, giving Omega_0 e^{2 v_0} / 2 exactly.
  tI_.assign(n, 0.0);
  tI_[0] = 0.5 * tom_[0] * std::exp(2.0 * tv_[0]);
  for (size_t i = 0; i + 1 < n; ++i) {
    const int m = 16;
    double a = tv_[i], bb = tv_[i + 1], hh = (bb - a) / (2 * m);
    auto f = [&](double u) { return std::exp(2.0 * u) * spline_eval(u, 0); };
    double s = f(a) + f(bb);
    for (int j = 1; j < 2 * m; ++j) s += (j % 2 ? 4.0 : 2.0) * f(a + j * hh);
    tI_[i + 1] = tI_[i] + s * hh / 3.0;
  }

  // measured bracket constants
  double r0 = std::exp(tv_.front());
  c_star_ = d(r0) * std::pow(r0 * r0 + 2.0, 4);
  C_star_ = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double r = std::exp(tv_[i]);
    C_star_ = std::max(C_star_, tom_[i] * std::pow(r * r + 2.0, 3));
  }
}

double VortexProfile::spline_eval(double v, int deriv) const {
  if (v < tv_.front() || v > tv_.back())
    throw std::domain_error("profile query outside tabulated range");
  size_t i = size_t(std::upper_bound(tv_.begin(), tv_.end(), v) - tv_.begin());
  if (i > 0) --i;
  if (i + 1 >= tv_.size()) i = tv_.size() - 2;
  double h = tv_[i + 1] - tv_[i];
  double A = (tv_[i + 1] - v) / h, Bc = (v - tv_[i]) / h;
  if (deriv == 0) {
    return A * tom_[i] + Bc * tom_[i + 1] +
           ((A * A * A - A) * tom_d2_[i] + (Bc * Bc * Bc - Bc) * tom_d2_[i + 1]) * h * h / 6.0;
  }
  return (tom_[i + 1] - tom_[i]) / h +
         (-(3.0 * A * A - 1.0) * tom_d2_[i] + (3.0 * Bc * Bc - 1.0) * tom_d2_[i + 1]) * h / 6.0;
}

// ---------------------------------------------------------------------------

double longrange_plateau(const VortexProfile& p, double v, double w) {
  if (!(w < v && v < 0.0))
    throw std::domain_error("longrange_plateau needs w < v < 0");
  if (!(v - w >= 2.0))
    throw std::domain_error("longrange_plateau needs v - w >= 2");
  return p.quotient(v, w);
}

AdmissibilityReport verify_admissibility(const VortexProfile& p, const Grid& g, int j_max) {
  AdmissibilityReport rep;
  rep.j_max = j_max;
  rep.positive = true;
  rep.decreasing = true;
  rep.C_star_measured = 0.0;
  rep.identity_residual = 0.0;

  for (size_t i = 0; i < g.n; ++i) {
    double v = g.v(i), r = std::exp(v);
    double om = p.omega(r);
    if (!(om > 0.0)) rep.positive = false;
    if (!(p.omega_deriv(r) < 0.0)) rep.decreasing = false;
    rep.C_star_measured = std::max(rep.C_star_measured, om * std::pow(r * r + 2.0, 3));
    double res = std::abs(2.0 * p.Bp(v) + p.Bpp(v) - std::exp(2.0 * v) * p.D(v));
    rep.identity_residual = std::max(rep.identity_residual, res);
  }

  // derivative envelopes of the remainder E(v) = D(v) - c_* (e^{2v}+2)^{-4}
  // near and below the core, via iterated central differences
  const double cs = p.c_star();
  auto E = [&](double v) {
    double s = std::exp(2.0 * v) + 2.0;
    return p.D(v) - cs / (s * s * s * s);
  };
  const double hfd = 0.25;
  const double C = std::max(rep.C_star_measured, 1e-12);
  rep.envelope_ratio = 0.0;
  for (size_t i = 0; i < g.n; ++i) {
    double v = g.v(i);
    if (v > 0.0) continue;
    double fact = 1.0;
    for (int j = 0; j <= j_max; ++j) {
      if (j > 0) fact *= j;
      // j-fold central difference with step hfd
      double acc = 0.0;
      double sign = 1.0, binom = 1.0;
      for (int m = 0; m <= j; ++m) {
        acc += sign * binom * E(v + (0.5 * j - m) * hfd);
        sign = -sign;
        binom = binom * (j - m) / (m + 1.0);
      }
      double dj = acc / std::pow(hfd, j);
      double x = std::exp(2.0 * v);
      double env = std::pow(C, j + 1) * fact * fact * x / std::pow(x + 2.0, 5);
      if (env > 0.0) rep.envelope_ratio = std::max(rep.envelope_ratio, std::abs(dj) / env);
    }
  }

  rep.pass = rep.positive && rep.decreasing && rep.identity_residual < 1e-9 &&
             rep.envelope_ratio <= 1.05;
  return rep;
}

}  // namespace vsdf

#include "vsdf/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "vsdf/quad.hpp"

namespace vsdf {

double moment_integral(const std::function<double(double)>& f0, double w, double tol) {
  double scale = std::exp(3.0 * std::min(w, 5.0));
  auto f = [&](double rho) { return f0(rho) * std::exp(3.0 * rho); };
  return integral_to(f, w, tol * std::max(scale, 1e-280));
}

namespace {

double k1_bracket(const VortexProfile& p, double w,
                  const std::function<double(double)>& f0) {
  double bp = p.Bp(w);
  return f0(w) - std::exp(-w) * p.D(w) / bp * moment_integral(f0, w);
}

}  // namespace

double k1_gamma(const VortexProfile& p, int k, double v, double w,
                const std::function<double(double)>& f0) {
  if (k != 1 && k != -1) throw std::invalid_argument("k1_gamma: defined for |k| = 1 only");
  if (v >= w) return 0.0;
  double bp = p.Bp(w);
  return 2.0 * M_PI * p.B_diff(v, w) / (bp * bp) * std::exp(v + w) * k1_bracket(p, w, f0);
}

std::vector<double> k1_gamma_column(const VortexProfile& p, int k, const Grid& g, double w,
                                    const std::function<double(double)>& f0) {
  if (k != 1 && k != -1)
    throw std::invalid_argument("k1_gamma_column: defined for |k| = 1 only");
  double bp = p.Bp(w);
  double bracket = k1_bracket(p, w, f0);
  std::vector<double> col(g.n, 0.0);
  for (size_t i = 0; i < g.n; ++i) {
    double v = g.v(i);
    if (v >= w) continue;
    col[i] = 2.0 * M_PI * p.B_diff(v, w) / (bp * bp) * std::exp(v + w) * bracket;
  }
  return col;
}

}  // namespace vsdf

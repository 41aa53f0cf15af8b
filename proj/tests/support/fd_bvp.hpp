#pragma once

// Self-contained second-order finite-difference oracle for two-point boundary
// value problems (k^2 - u'' + q(v)) u = f(v), u(a) = u(b) = 0, written without
// any library solver so kernel code paths are cross-checked independently.

#include <cstddef>
#include <functional>
#include <vector>

namespace testsupport {

struct BvpGrid {
  double a, h;
  std::size_t n;
  double v(std::size_t i) const { return a + double(i) * h; }
};

// n interior+boundary nodes including both Dirichlet ends
inline std::vector<double> dirichlet_bvp(double a, double b, std::size_t n,
                                         const std::function<double(double)>& q,
                                         const std::function<double(double)>& f) {
  double h = (b - a) / double(n - 1);
  std::size_t m = n - 2;  // unknowns
  std::vector<double> sub(m), dia(m), sup(m), rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    double v = a + double(i + 1) * h;
    sub[i] = -1.0 / (h * h);
    sup[i] = -1.0 / (h * h);
    dia[i] = 2.0 / (h * h) + q(v);
    rhs[i] = f(v);
  }
  // forward elimination / back substitution, written out in place
  for (std::size_t i = 1; i < m; ++i) {
    double w = sub[i] / dia[i - 1];
    dia[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[m - 1] /= dia[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / dia[i];

  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) u[i + 1] = rhs[i];
  return u;
}

// Green's-kernel column oracle: delta source at node index j_rho, potential
// k^2 + qext(v); jump nodes of a piecewise-constant qext should be passed
// through `qext` already averaged for clean second-order convergence.
inline std::vector<double> green_column_oracle(int k, double a, double b, std::size_t n,
                                               std::size_t j_rho,
                                               const std::function<double(double)>& qext) {
  double h = (b - a) / double(n - 1);
  auto q = [&](double v) { return double(k) * k + qext(v); };
  auto f = [&](double v) {
    std::size_t i = std::size_t((v - a) / h + 0.5);
    return i == j_rho ? 1.0 / h : 0.0;
  };
  return dirichlet_bvp(a, b, n, q, f);
}

}  // namespace testsupport

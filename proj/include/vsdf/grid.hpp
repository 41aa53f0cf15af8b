#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsdf {

/// Uniform grid in the logarithmic radial variable v = log r.
///
/// Nodes are v_i = v0 + i*h for i = 0..n-1.  All field data in the library is
/// sampled on grids of this type; h defaults to 1/64 at call sites that build
/// one (the working resolution used by the verification suites).
struct Grid {
  double v0 = 0.0;  ///< first node
  double h = 1.0 / 64.0;  ///< spacing
  std::size_t n = 0;  ///< node count

  double v(std::size_t i) const { return v0 + static_cast<double>(i) * h; }
  double vmax() const { return v(n - 1); }

  /// Index of the node nearest to x (clamped to the grid).
  std::size_t nearest(double x) const {
    if (n == 0) throw std::invalid_argument("Grid::nearest: empty grid");
    double t = (x - v0) / h;
    if (t <= 0.0) return 0;
    auto i = static_cast<std::size_t>(std::llround(t));
    return i >= n ? n - 1 : i;
  }

  /// Snap x onto the grid (value of the nearest node).
  double snap(double x) const { return v(nearest(x)); }

  bool contains(double x) const { return x >= v0 - 1e-12 && x <= vmax() + 1e-12; }

  std::vector<double> nodes() const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = v(i);
    return out;
  }
};

/// Build a grid covering [a, b] with spacing ~h; endpoints land on nodes.
inline Grid make_grid(double a, double b, double h) {
  if (!(b > a) || !(h > 0.0)) throw std::invalid_argument("make_grid: need b > a and h > 0");
  auto m = static_cast<std::size_t>(std::ceil((b - a) / h - 1e-12));
  return Grid{a, (b - a) / static_cast<double>(m), m + 1};
}

/// Trapezoidal quadrature weight of node i (h at interior nodes, h/2 at ends).
inline double trap_weight(const Grid& g, std::size_t i) {
  return (i == 0 || i + 1 == g.n) ? 0.5 * g.h : g.h;
}

/// Discrete L2 norm  sqrt( sum_i w_i |f_i|^2 )  with trapezoid weights.
template <class Vec>
double l2_norm(const Grid& g, const Vec& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) s += trap_weight(g, i) * std::norm(f[i]);
  return std::sqrt(s);
}

}  // namespace vsdf

#include "vsdf/bump.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace vsdf {
namespace {

double raw_bump(double x) {
  double s = 1.0 - x * x;
  return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

// Mass of the raw bump, computed once with Simpson on a fine grid.  The
// integrand is analytic inside (-1,1) and flat at the ends, so a fixed
// composite rule converges fast; 1<<16 cells gives ~1e-15.
double raw_mass() {
  static const double mass = [] {
    const int n = 1 << 16;
    const double h = 2.0 / n;
    double s = raw_bump(-1.0) + raw_bump(1.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * raw_bump(-1.0 + i * h);
    return s * h / 3.0;
  }();
  return mass;
}

struct CdfTable {
  static constexpr int kCells = 4096;
  std::vector<double> value;  // CDF at nodes x_i = -1 + 2 i / kCells

  CdfTable() : value(kCells + 1) {
    // March cell by cell with Simpson; node derivative errors are then
    // corrected by the Hermite interpolation (which uses the exact psi).
    const double h = 2.0 / kCells;
    value[0] = 0.0;
    for (int i = 0; i < kCells; ++i) {
      double a = -1.0 + i * h;
      double s = raw_bump(a) + 4.0 * raw_bump(a + 0.5 * h) + raw_bump(a + h);
      // refine the cell with one more bisection level for safety
      double s2 = raw_bump(a) + 4.0 * raw_bump(a + 0.25 * h) + 2.0 * raw_bump(a + 0.5 * h) +
                  4.0 * raw_bump(a + 0.75 * h) + raw_bump(a + h);
      double cell = (s2 * h / 12.0) + ((s2 * h / 12.0) - (s * h / 6.0)) / 15.0;
      value[i + 1] = value[i] + cell;
    }
    double total = value[kCells];
    for (auto& x : value) x /= total;
  }
};

const CdfTable& cdf_table() {
  static const CdfTable table;
  return table;
}

}  // namespace

double bump(double x) { return raw_bump(x) / raw_mass(); }

double bump_deriv(double x) {
  double s = 1.0 - x * x;
  if (s <= 0.0) return 0.0;
  // d/dx exp(-1/s) = exp(-1/s) * (-2x / s^2)
  return bump(x) * (-2.0 * x / (s * s));
}

double bump_cdf(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const auto& tab = cdf_table();
  const double h = 2.0 / CdfTable::kCells;
  double t = (x + 1.0) / h;
  int i = static_cast<int>(t);
  if (i >= CdfTable::kCells) i = CdfTable::kCells - 1;
  double u = t - i;  // in [0,1)
  double x0 = -1.0 + i * h;
  // Cubic Hermite on the cell with exact derivatives psi(x0), psi(x1).
  double p0 = tab.value[i], p1 = tab.value[i + 1];
  double m0 = bump(x0) * h, m1 = bump(x0 + h) * h;
  double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 +
         (u3 - u2) * m1;
}

}  // namespace vsdf

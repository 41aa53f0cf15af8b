#include "vsdf/quad.hpp"

namespace vsdf {
namespace {

double simpson(double fa, double fm, double fb, double h6) { return h6 * (fa + 4.0 * fm + fb); }

double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double tol, int depth, int min_depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(fa, flm, fm, (m - a) / 6.0);
  double right = simpson(fm, frm, fb, (b - m) / 6.0);
  double err = left + right - whole;
  // min_depth forces refinement before the error estimate is trusted, so an
  // integrand supported between the sample points cannot be missed entirely
  if ((min_depth <= 0 && std::abs(err) <= 15.0 * tol) || depth <= 0)
    return left + right + err / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, min_depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, min_depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth, int min_depth) {
  if (!(tol > 0.0)) throw std::invalid_argument("adaptive_simpson: tol must be positive");
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  return adapt(f, a, b, fa, fm, fb, simpson(fa, fm, fb, (b - a) / 6.0), tol, max_depth,
               min_depth);
}

double integral_to(const std::function<double(double)>& f, double b, double tol, double cut) {
  if (b <= cut) return 0.0;
  // Unit-length panels so narrowly supported integrands are always sampled;
  // each panel still refines adaptively below that.
  double acc = 0.0;
  double lo = cut;
  int panels = std::max(1, int(std::ceil(b - cut)));
  double step = (b - cut) / panels;
  double ptol = tol / panels;
  for (int i = 0; i < panels; ++i) {
    double hi = (i + 1 == panels) ? b : lo + step;
    acc += adaptive_simpson(f, lo, hi, ptol, 60, 2);
    lo = hi;
  }
  return acc;
}

}  // namespace vsdf

#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vsdf {

using cpx = std::complex<double>;

/// Solve a tridiagonal system in place with the Thomas algorithm.
///
/// lower[i] multiplies x[i-1] in row i (lower[0] unused), diag[i] multiplies
/// x[i], upper[i] multiplies x[i+1] (upper[n-1] unused); rhs is overwritten
/// with the solution.  No pivoting: every system assembled in this project is
/// strongly diagonally dominant through the 2/h^2 stencil term, which keeps
/// the elimination stable and, for the M-matrix systems (positive potential,
/// one-signed source), preserves relative accuracy of exponentially small
/// solution components -- several verification fits depend on that.
template <class T>
void solve_tridiag(const std::vector<T>& lower, std::vector<T>& diag,
                   const std::vector<T>& upper, std::vector<T>& rhs) {
  const std::size_t n = diag.size();
  if (n == 0 || lower.size() != n || upper.size() != n || rhs.size() != n)
    throw std::invalid_argument("solve_tridiag: inconsistent sizes");
  for (std::size_t i = 1; i < n; ++i) {
    T m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

/// Convenience wrapper that keeps the inputs intact.
template <class T>
std::vector<T> solve_tridiag_copy(std::vector<T> lower, std::vector<T> diag,
                                  std::vector<T> upper, std::vector<T> rhs) {
  solve_tridiag(lower, diag, upper, rhs);
  return rhs;
}

}  // namespace vsdf

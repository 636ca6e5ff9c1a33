#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace motjvie::quad {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Cached Gauss-Legendre rule with n points.
const GaussRule& gauss_legendre(int n);

// Double-exponential nodes, grouped by refinement level. Level 0 holds
// t = 0, +-1, +-2, ...; level L > 0 holds the odd multiples of 2^-L.
struct TanhSinhNode {
  double comp;    // 1 - tanh(pi/2 sinh t), computed without cancellation
  double weight;  // pi/2 cosh t / cosh^2(pi/2 sinh t)
};
const std::vector<TanhSinhNode>& tanh_sinh_level(int level);
inline constexpr int kMaxTanhSinhLevel = 9;
inline constexpr int kMaxVector = 64;

// Integrates the vector valued f over [a, b]. f(x, out) writes n values.
// Refines until successive levels agree to abs_tol in every component.
// Adds the result to acc and returns the last level difference.
template <class F>
double tanh_sinh(F&& f, double a, double b, int n, double* acc, double abs_tol,
                 int max_level = 7, int min_level = 3) {
  if (!(b > a)) return 0.0;
  const double half = 0.5 * (b - a);
  std::array<double, kMaxVector> sum{}, prev{}, val{};
  double err = 0.0;
  for (int level = 0; level <= max_level; ++level) {
    const double h = std::ldexp(1.0, -level);
    std::array<double, kMaxVector> part{};
    for (const auto& nd : tanh_sinh_level(level)) {
      const double off = half * nd.comp;
      if (nd.comp >= 1.0) {  // centre node, only on level 0
        f(a + half, val.data());
        for (int i = 0; i < n; ++i) part[i] += nd.weight * val[i];
        continue;
      }
      f(a + off, val.data());
      for (int i = 0; i < n; ++i) part[i] += nd.weight * val[i];
      f(b - off, val.data());
      for (int i = 0; i < n; ++i) part[i] += nd.weight * val[i];
    }
    for (int i = 0; i < n; ++i) sum[i] = (level == 0 ? 0.0 : 0.5 * sum[i]) + h * half * part[i];
    if (level > 0) {
      err = 0.0;
      for (int i = 0; i < n; ++i) err = std::max(err, std::abs(sum[i] - prev[i]));
      if (level >= min_level && err <= abs_tol) break;
    }
    prev = sum;
  }
  for (int i = 0; i < n; ++i) acc[i] += sum[i];
  return err;
}

// Piecewise tanh-sinh over the sorted, deduplicated breakpoints in [a, b].
template <class F>
double tanh_sinh_pieces(F&& f, std::vector<double> cuts, double a, double b, int n, double* acc,
                        double abs_tol, int max_level = 7) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double err = 0.0;
  double lo = a;
  const double eps = 1e-14 * std::max(1.0, std::abs(b));
  for (double c : cuts) {
    if (c <= lo + eps) continue;
    if (c > b) c = b;
    err += tanh_sinh(f, lo, c, n, acc, abs_tol, max_level);
    lo = c;
    if (lo >= b) break;
  }
  return err;
}

}  // namespace motjvie::quad

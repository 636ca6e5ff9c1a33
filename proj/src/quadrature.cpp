#include "motjvie/quadrature.hpp"

#include <map>
#include <mutex>

#include "motjvie/common.hpp"

namespace motjvie::quad {

namespace {

GaussRule make_gauss(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1 - x * x) * dp * dp);
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

std::vector<std::vector<TanhSinhNode>> make_levels() {
  std::vector<std::vector<TanhSinhNode>> levels(kMaxTanhSinhLevel + 1);
  for (int level = 0; level <= kMaxTanhSinhLevel; ++level) {
    const double h = std::ldexp(1.0, -level);
    if (level == 0) levels[0].push_back({1.0, 0.5 * pi});
    for (int j = 1;; ++j) {
      if (level > 0 && j % 2 == 0) continue;
      const double t = j * h;
      const double u = 0.5 * pi * std::sinh(t);
      const double comp = 1.0 / (std::exp(u) * std::cosh(u));
      const double w = 0.5 * pi * std::cosh(t) / (std::cosh(u) * std::cosh(u));
      if (w < 1e-30 || comp < 1e-280) break;
      levels[level].push_back({comp, w});
    }
  }
  return levels;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  if (n < 1) throw ConfigError("Gauss rule needs at least one point");
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss(n)).first;
  return it->second;
}

const std::vector<TanhSinhNode>& tanh_sinh_level(int level) {
  static const auto levels = make_levels();
  return levels.at(level);
}

}  // namespace motjvie::quad

#pragma once

// Brute-force reference for the tested space-time kernel. Independent of the
// library route: the curl curl is split with the wave equation,
//   S^{ba} = -D_ba / V + delta_ab [ B2(k+1) delta_{o,0} - (1/V) ∫∫ B2''(k+1-R)/(4 pi R) ],
// where D_ba is the signed face-pair integral of B2(k+1-R)/(4 pi R). All
// integrals are done in difference coordinates d = r - r' with Cartesian
// nesting: innermost Gauss-Legendre in u = asinh(x / c), outer levels
// double-exponential with explicit breakpoints. Lengths in units of c*dt.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

inline double spline(double x) {
  if (x <= 0.0 || x >= 3.0) return 0.0;
  if (x < 1.0) return 0.5 * x * x;
  if (x < 2.0) return 0.5 * (-2.0 * x * x + 6.0 * x - 3.0);
  return 0.5 * (3.0 - x) * (3.0 - x);
}

inline double spline_dd(double x) {
  if (x <= 0.0 || x >= 3.0) return 0.0;
  if (x < 1.0) return 1.0;
  if (x < 2.0) return -2.0;
  return 1.0;
}

struct Rule {
  std::vector<double> x, w;
};

inline Rule legendre(int n) {
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p0 = 1, p1 = x, dp = 1;
    for (int it = 0; it < 200; ++it) {
      p0 = 1;
      p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    r.x[i] = x;
    r.w[i] = 2.0 / ((1 - x * x) * dp * dp);
  }
  return r;
}

// Piecewise linear weight: value a[i] + b[i] x on [knots[i], knots[i+1]].
struct Weight {
  std::vector<double> knots, a, b;
  double lo() const { return knots.front(); }
  double hi() const { return knots.back(); }
  double operator()(double x) const {
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
      if (x >= knots[i] && x <= knots[i + 1]) return a[i] + b[i] * x;
    return 0.0;
  }
};

inline Weight tri(double c, double h) {
  return {{c - h, c, c + h}, {h - c, h + c}, {1.0, -1.0}};
}
// +1 on [c, c+h], -1 on [c-h, c]
inline Weight step_up(double c, double h) { return {{c - h, c, c + h}, {-1.0, 1.0}, {0.0, 0.0}}; }
// +1 on [c-h, c], -1 on [c, c+h]
inline Weight step_down(double c, double h) { return {{c - h, c, c + h}, {1.0, -1.0}, {0.0, 0.0}}; }

using Kappa = std::function<void(double R, int n, double* out)>;  // R * kernel, per lag

constexpr int kMaxLags = 32;

// Double-exponential rule on [a, b]; doubles the level until two agree.
template <class F>
void de_rule(const F& f, double a, double b, int n, double* acc, double tol) {
  if (!(b > a)) return;
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  std::array<double, kMaxLags> prev{}, cur{}, v{};
  for (int level = 3; level <= 9; ++level) {
    const double h = std::ldexp(1.0, -level);
    cur.fill(0.0);
    for (int j = -static_cast<int>(4.0 / h); j <= static_cast<int>(4.0 / h); ++j) {
      const double t = j * h;
      const double s = 0.5 * kPi * std::sinh(t);
      const double cs = std::cosh(s);
      const double w = 0.5 * kPi * std::cosh(t) / (cs * cs);
      if (w < 1e-25) continue;
      // distance from the nearer end, without cancellation
      const double d = half / (std::exp(std::abs(s)) * cs);
      const double x = t < 0 ? a + d : (t > 0 ? b - d : mid);
      if (!(x > a && x < b) && t != 0) continue;
      f(x, v.data());
      for (int i = 0; i < n; ++i) cur[i] += h * half * w * v[i];
    }
    if (level > 3) {
      double err = 0;
      for (int i = 0; i < n; ++i) err = std::max(err, std::abs(cur[i] - prev[i]));
      if (err < tol) break;
    }
    prev = cur;
  }
  for (int i = 0; i < n; ++i) acc[i] += cur[i];
}

template <class F>
void de_pieces(const F& f, std::vector<double> cuts, double a, double b, int n, double* acc,
               double tol) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double lo = a;
  for (double c : cuts) {
    if (c <= lo + 1e-13) continue;
    c = std::min(c, b);
    de_rule(f, lo, c, n, acc, tol);
    lo = c;
  }
}

class Integrator {
 public:
  Integrator(int lags, double rmax) : n_(lags), rmax_(rmax), gl_(legendre(12)) {}

  // ∫ wx(x) kappa(sqrt(c^2 + x^2)) / R dx, kappa is R * kernel
  void line(const Weight& wx, double c, const Kappa& kappa, double* out) const {
    std::vector<double> cuts(wx.knots.begin(), wx.knots.end());
    cuts.push_back(0.0);
    for (double q = 1; q <= rmax_ + 1; q += 1)
      if (q > c) {
        const double t = std::sqrt(q * q - c * c);
        cuts.push_back(t);
        cuts.push_back(-t);
      }
    std::sort(cuts.begin(), cuts.end());
    std::array<double, kMaxLags> v{};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double x0 = std::max(cuts[i], wx.lo()), x1 = std::min(cuts[i + 1], wx.hi());
      if (!(x1 > x0)) continue;
      const double u0 = std::asinh(x0 / c), u1 = std::asinh(x1 / c);
      const int chunks = std::max(1, static_cast<int>(std::ceil((u1 - u0) / 0.5)));
      const double du = (u1 - u0) / chunks;
      for (int ch = 0; ch < chunks; ++ch) {
        const double ua = u0 + ch * du;
        for (std::size_t g = 0; g < gl_.x.size(); ++g) {
          const double u = ua + 0.5 * du * (gl_.x[g] + 1.0);
          const double x = c * std::sinh(u), R = c * std::cosh(u);
          const double wv = wx(std::clamp(x, x0, x1)) * 0.5 * du * gl_.w[g];
          if (wv == 0.0) continue;
          kappa(R, n_, v.data());
          for (int k = 0; k < n_; ++k) out[k] += wv * v[k];
        }
      }
    }
  }

  // ∫∫ wy(y) wx(x) kernel(sqrt(z^2 + y^2 + x^2)) dx dy for fixed z
  void plane(const Weight& wx, const Weight& wy, double z, const Kappa& kappa, double* out,
             double tol) const {
    std::vector<double> cuts(wy.knots.begin(), wy.knots.end());
    cuts.push_back(0.0);
    std::vector<double> xk(wx.knots.begin(), wx.knots.end());
    xk.push_back(0.0);
    for (double q = 1; q <= rmax_ + 1; q += 1) {
      for (double x : xk) {
        const double r2 = q * q - z * z - x * x;
        if (r2 > 0) {
          cuts.push_back(std::sqrt(r2));
          cuts.push_back(-std::sqrt(r2));
        }
      }
    }
    auto f = [&](double y, double* o) {
      for (int k = 0; k < n_; ++k) o[k] = 0.0;
      const double w = wy(y);
      if (w == 0.0) return;
      line(wx, std::hypot(z, y), kappa, o);
      for (int k = 0; k < n_; ++k) o[k] *= w;
    };
    de_pieces(f, cuts, wy.lo(), wy.hi(), n_, out, tol);
  }

  // ∫∫∫ wz wy wx kernel(|d|)
  void volume(const Weight& wx, const Weight& wy, const Weight& wz, const Kappa& kappa, double* out,
              double tol) const {
    std::vector<double> cuts(wz.knots.begin(), wz.knots.end());
    cuts.push_back(0.0);
    std::vector<double> xk(wx.knots.begin(), wx.knots.end()), yk(wy.knots.begin(), wy.knots.end());
    xk.push_back(0.0);
    yk.push_back(0.0);
    for (double q = 1; q <= rmax_ + 1; q += 1)
      for (double x : xk)
        for (double y : yk)
          for (int mask = 0; mask < 4; ++mask) {
            const double r2 = q * q - ((mask & 1) ? x * x : 0.0) - ((mask & 2) ? y * y : 0.0);
            if (r2 > 0) {
              cuts.push_back(std::sqrt(r2));
              cuts.push_back(-std::sqrt(r2));
            }
          }
    auto f = [&](double z, double* o) {
      for (int k = 0; k < n_; ++k) o[k] = 0.0;
      const double w = wz(z);
      if (w == 0.0) return;
      plane(wx, wy, z, kappa, o, tol);
      for (int k = 0; k < n_; ++k) o[k] *= w;
    };
    de_pieces(f, cuts, wz.lo(), wz.hi(), n_, out, tol);
  }

 private:
  int n_;
  double rmax_;
  Rule gl_;
};

// S^{ba}[offset][k] for k = 0..ell; edges a and offset o in units of c*dt.
inline std::vector<double> kernel_element(int beta, int alpha, const std::array<int, 3>& o,
                                          const std::array<double, 3>& a, int ell,
                                          double tol = 1e-11) {
  const int n = ell + 1;
  double rmax = 0;
  for (int i = 0; i < 3; ++i) rmax += std::pow((std::abs(o[i]) + 1) * a[i], 2);
  rmax = std::sqrt(rmax);
  Integrator I(n, rmax);
  const double vol = a[0] * a[1] * a[2];
  Kappa potential = [](double R, int nl, double* v) {
    for (int k = 0; k < nl; ++k) v[k] = spline(k + 1.0 - R) / (4.0 * kPi);
  };
  std::vector<double> out(n, 0.0);
  if (beta != alpha) {
    const int g = 3 - beta - alpha;
    std::array<Weight, 3> w;
    w[beta] = step_up(o[beta] * a[beta], a[beta]);
    w[alpha] = step_down(o[alpha] * a[alpha], a[alpha]);
    w[g] = tri(o[g] * a[g], a[g]);
    std::vector<double> d(n, 0.0);
    I.volume(w[0], w[1], w[2], potential, d.data(), tol);
    for (int k = 0; k < n; ++k) out[k] = -d[k] / vol;
    return out;
  }
  const int p = beta == 0 ? 1 : 0, q = beta == 2 ? 1 : 2;
  const Weight wp = tri(o[p] * a[p], a[p]), wq = tri(o[q] * a[q], a[q]);
  std::vector<double> d(n, 0.0);
  const double gs[3] = {o[beta] * a[beta], (o[beta] + 1) * a[beta], (o[beta] - 1) * a[beta]};
  const double cs[3] = {2.0, -1.0, -1.0};
  for (int i = 0; i < 3; ++i) {
    std::vector<double> t(n, 0.0);
    I.plane(wp, wq, gs[i], potential, t.data(), tol);
    for (int k = 0; k < n; ++k) d[k] += cs[i] * t[k];
  }
  Kappa accel = [](double R, int nl, double* v) {
    for (int k = 0; k < nl; ++k) v[k] = spline_dd(k + 1.0 - R) / (4.0 * kPi);
  };
  std::vector<double> vt(n, 0.0);
  I.volume(tri(o[0] * a[0], a[0]), tri(o[1] * a[1], a[1]), tri(o[2] * a[2], a[2]), accel, vt.data(),
           tol);
  const bool self = o[0] == 0 && o[1] == 0 && o[2] == 0;
  for (int k = 0; k < n; ++k)
    out[k] = -d[k] / vol - vt[k] / vol + (self ? spline(k + 1.0) : 0.0);
  return out;
}

}  // namespace oracle

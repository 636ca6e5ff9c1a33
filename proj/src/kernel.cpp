#include "motjvie/kernel.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>

#include "motjvie/common.hpp"
#include "motjvie/quadrature.hpp"

// The tested field of a unit voxel current is reduced to surface integrals.
// With A = alpha * phi and phi the retarded potential of the source voxel,
// curl curl A = grad div A - lap A, and both terms become face-pair integrals
// of K(R) = B2(k+1-R)/(4 pi R) by the divergence theorem:
//   S^{ba} = -(D_ba - delta_ab sum_g D_gg) / V,
//   D_ba   = sum_{s,s'} s s' int_{test face b,s} int_{source face a,s'} K.
// Lengths are measured in units of c*dt, so the values are dimensionless.
// Parallel-face pairs reduce to a radial integral of the arc weight of the
// triangle autocorrelation, perpendicular pairs to a radial integral of a
// closed-form line integral times an arc weight.

namespace motjvie {

namespace {

constexpr double kInv4Pi = 1.0 / (4.0 * pi);

// Rectangle in the closed first quadrant carrying weight (ax + bx x)(ay + by y).
struct QRect {
  double x0, x1, y0, y1, ax, bx, ay, by;
};

void push_rect(std::vector<QRect>& out, double x0, double x1, double y0, double y1, double ax,
               double bx, double ay, double by) {
  if (x1 <= 0.0) {
    const double t = x0;
    x0 = -x1;
    x1 = -t;
    bx = -bx;
  }
  if (y1 <= 0.0) {
    const double t = y0;
    y0 = -y1;
    y1 = -t;
    by = -by;
  }
  out.push_back({x0, x1, y0, y1, ax, bx, ay, by});
}

// Integral of the weight over the arc of radius s inside the rectangle.
double arc_weight(const QRect& r, double s) {
  if (s <= 0.0) return 0.0;
  if (s * s <= r.x0 * r.x0 + r.y0 * r.y0 || s * s >= r.x1 * r.x1 + r.y1 * r.y1) return 0.0;
  const double inv = 1.0 / s;
  // start: larger of acos(x1/s) and asin(y0/s)
  double ca, sa;
  {
    double cx = 1.0, sx = 0.0;
    if (r.x1 < s) {
      cx = r.x1 * inv;
      sx = std::sqrt((s - r.x1) * (s + r.x1)) * inv;
    }
    const double sy = r.y0 * inv;
    const double cy = std::sqrt((s - r.y0) * (s + r.y0)) * inv;
    if (cx <= cy) {
      ca = cx;
      sa = sx;
    } else {
      ca = cy;
      sa = sy;
    }
  }
  // end: smaller of acos(x0/s) and asin(y1/s)
  double cb, sb;
  {
    const double cx = r.x0 * inv;
    const double sx = std::sqrt((s - r.x0) * (s + r.x0)) * inv;
    double cy = 0.0, sy = 1.0;
    if (r.y1 < s) {
      sy = r.y1 * inv;
      cy = std::sqrt((s - r.y1) * (s + r.y1)) * inv;
    }
    if (cx >= cy) {
      cb = cx;
      sb = sx;
    } else {
      cb = cy;
      sb = sy;
    }
  }
  const double dphi = std::atan2(sb * ca - cb * sa, ca * cb + sa * sb);
  if (dphi <= 0.0) return 0.0;
  return r.ax * r.ay * dphi + r.ax * r.by * s * (ca - cb) + r.bx * r.ay * s * (sb - sa) +
         0.5 * r.bx * r.by * s * s * (sb * sb - sa * sa);
}

double arc_sum(const std::vector<QRect>& rects, double s) {
  double t = 0.0;
  for (const auto& r : rects) t += arc_weight(r, s);
  return t;
}

// B2 piece j (x in [j, j+1]) as a polynomial in R where x = m - R.
inline void b2_poly(int j, double m, double& A, double& B, double& C) {
  static constexpr double a[3] = {0.0, -1.5, 4.5};
  static constexpr double b[3] = {0.0, 3.0, -3.0};
  static constexpr double c[3] = {0.5, -1.0, 0.5};
  A = a[j] + b[j] * m + c[j] * m * m;
  B = -b[j] - 2.0 * c[j] * m;
  C = c[j];
}

struct LagWindow {
  int lo = 0, hi = -1;
  int size() const { return hi - lo + 1; }
};

LagWindow lag_window(double rmin, double rmax, int ell) {
  LagWindow w;
  // distances within 1e-9 of an integer snap up; the dropped lag is O(1e-18)
  w.lo = std::max(0, static_cast<int>(std::floor(rmin + 1e-9)));
  w.hi = std::min(ell, static_cast<int>(std::floor(rmax)) + 2);
  return w;
}

void add_integers(std::vector<double>& cuts, double lo, double hi) {
  for (double q = std::floor(lo) + 1.0; q < hi; q += 1.0) cuts.push_back(q);
}

// int_{x0}^{x1} K_k(sqrt(t^2 + rho^2)) dt for lags in the window, 4 pi omitted.
void line_integral(double x0, double x1, double rho, const LagWindow& win, double* out) {
  const double r0 = std::hypot(x0, rho), r1 = std::hypot(x1, rho);
  const int qlo = std::max(1, static_cast<int>(std::floor(r0)) + 1);
  const int qhi = static_cast<int>(std::ceil(r1));
  const double rho2 = rho * rho;
  for (int q = qlo; q <= qhi; ++q) {
    const double ra = std::max(r0, q - 1.0), rb = std::min(r1, static_cast<double>(q));
    if (rb <= ra) continue;
    const double ta = (q - 1.0 > r0) ? std::sqrt((q - 1.0 - rho) * (q - 1.0 + rho)) : x0;
    const double tb = (q < r1) ? std::sqrt((q - rho) * (q + rho)) : x1;
    const double p0 = std::log((tb + rb) / (ta + ra));
    const double p1 = tb - ta;
    const double p2 = 0.5 * (tb * rb - ta * ra + rho2 * p0);
    for (int j = 0; j < 3; ++j) {
      const int k = q - 1 + j;
      if (k < win.lo || k > win.hi) continue;
      double A, B, C;
      b2_poly(j, k + 1.0, A, B, C);
      out[k - win.lo] += A * p0 + B * p1 + C * p2;
    }
  }
}

struct EntryResult {
  double err = 0.0;
  bool converged = true;
};

// F(g) = int int K(sqrt(g^2 + x^2 + y^2)) tri(x - cp) tri(y - cq) dx dy with
// triangles of half-width ap, aq.
EntryResult parallel_entry(double g, double cp, double ap, double cq, double aq, int ell,
                           double tol, int max_level, double* lags) {
  const double xmin = std::max(0.0, cp - ap), ymin = std::max(0.0, cq - aq);
  const double smin = std::hypot(xmin, ymin), smax = std::hypot(cp + ap, cq + aq);
  const double rmin = std::hypot(g, smin), rmax = std::hypot(g, smax);
  const LagWindow win = lag_window(rmin, rmax, ell);
  EntryResult res;
  if (win.size() <= 0) return res;
  if (win.size() > quad::kMaxVector) throw ConfigError("time step too small for the voxel size");

  std::vector<QRect> rects;
  push_rect(rects, cp - ap, cp, cq - aq, cq, ap - cp, 1.0, aq - cq, 1.0);
  push_rect(rects, cp - ap, cp, cq, cq + aq, ap - cp, 1.0, aq + cq, -1.0);
  push_rect(rects, cp, cp + ap, cq - aq, cq, ap + cp, -1.0, aq - cq, 1.0);
  push_rect(rects, cp, cp + ap, cq, cq + aq, ap + cp, -1.0, aq + cq, -1.0);

  const double xs[3] = {std::abs(cp - ap), cp, cp + ap};
  const double ys[3] = {std::abs(cq - aq), cq, cq + aq};
  std::vector<double> cuts;
  for (double x : xs) cuts.push_back(std::hypot(g, x));
  for (double y : ys) cuts.push_back(std::hypot(g, y));
  for (double x : xs)
    for (double y : ys) cuts.push_back(std::hypot(g, std::hypot(x, y)));
  add_integers(cuts, rmin, rmax);

  auto f = [&](double R, double* out) {
    const double s = std::sqrt(std::max(0.0, (R - g) * (R + g)));
    const double th = arc_sum(rects, s) * kInv4Pi;
    for (int k = win.lo; k <= win.hi; ++k) out[k - win.lo] = th == 0.0 ? 0.0 : b2(k + 1.0 - R) * th;
  };
  std::array<double, quad::kMaxVector> acc{};
  res.err = quad::tanh_sinh_pieces(f, cuts, rmin, rmax, win.size(), acc.data(), tol, max_level);
  res.converged = res.err <= tol * static_cast<double>(cuts.size() + 1);
  for (int k = win.lo; k <= win.hi; ++k) lags[k] = acc[k - win.lo];
  return res;
}

// H = int_{x0}^{x1} int_{y0}^{y1} int tri(z - cz) K(|(x,y,z)|) dz dy dx with a
// triangle of half-width az; x0, y0 >= 0.
EntryResult perpendicular_entry(double x0, double x1, double y0, double y1, double cz, double az,
                                int ell, double tol, int max_level, double* lags) {
  const double zmin = std::max(0.0, cz - az);
  const double pmin = std::hypot(y0, zmin), pmax = std::hypot(y1, cz + az);
  const LagWindow win = lag_window(std::hypot(x0, pmin), std::hypot(x1, pmax), ell);
  EntryResult res;
  if (win.size() <= 0) return res;
  if (win.size() > quad::kMaxVector) throw ConfigError("time step too small for the voxel size");

  std::vector<QRect> rects;
  push_rect(rects, y0, y1, cz - az, cz, 1.0, 0.0, az - cz, 1.0);
  push_rect(rects, y0, y1, cz, cz + az, 1.0, 0.0, az + cz, -1.0);

  const double ys[2] = {y0, y1};
  const double zs[3] = {std::abs(cz - az), cz, cz + az};
  std::vector<double> cuts(ys, ys + 2);
  for (double z : zs) cuts.push_back(z);
  for (double y : ys)
    for (double z : zs) cuts.push_back(std::hypot(y, z));
  for (double q = std::max(1.0, std::floor(pmin)); q <= std::ceil(std::hypot(x1, pmax)); q += 1.0) {
    if (q > pmin && q < pmax) cuts.push_back(q);
    for (double x : {x0, x1})
      if (q > x) {
        const double p = std::sqrt((q - x) * (q + x));
        if (p > pmin && p < pmax) cuts.push_back(p);
      }
  }

  auto f = [&](double rho, double* out) {
    const int n = win.size();
    for (int i = 0; i < n; ++i) out[i] = 0.0;
    const double tw = arc_sum(rects, rho);
    if (tw == 0.0) return;
    line_integral(x0, x1, rho, win, out);
    const double scale = tw * rho * kInv4Pi;
    for (int i = 0; i < n; ++i) out[i] *= scale;
  };
  std::array<double, quad::kMaxVector> acc{};
  res.err = quad::tanh_sinh_pieces(f, cuts, pmin, pmax, win.size(), acc.data(), tol, max_level);
  res.converged = res.err <= tol * static_cast<double>(cuts.size() + 1);
  for (int k = win.lo; k <= win.hi; ++k) lags[k] = acc[k - win.lo];
  return res;
}

struct Table {
  std::array<int, 3> dims{};
  std::vector<double> lags;  // entry-major, ell+1 per entry
  std::vector<double> err;
  int stride = 0;
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
  }
  const double* at(int i, int j, int k) const { return lags.data() + index(i, j, k) * stride; }
  double err_at(int i, int j, int k) const { return err[index(i, j, k)]; }
};

inline int cell(int i) { return i >= 0 ? i : -i - 1; }

}  // namespace

int lag_count(const VoxelGrid& g, double dt) {
  if (!(dt > 0)) throw ConfigError("time step must be positive");
  const double diag = std::sqrt(std::pow(g.U * g.dx, 2) + std::pow(g.V * g.dy, 2) +
                                std::pow(g.W * g.dz, 2));
  return static_cast<int>(std::floor(diag / (c0 * dt))) + 2;
}

double InteractionKernel::Z(int beta, int alpha, int m, int mp, int k) const {
  if (k < 0 || k > ell) return 0.0;
  const int U_ = U, V_ = V;
  const int du = m % U_ - mp % U_;
  const int dv = (m / U_) % V_ - (mp / U_) % V_;
  const int dw = m / (U_ * V_) - mp / (U_ * V_);
  double z = -contrast[m] * S(beta, alpha, du, dv, dw, k);
  if (m == mp && beta == alpha) z += ident[k];
  return z;
}

void attach_grid(InteractionKernel& K, const VoxelGrid& g) {
  if (g.U != K.U || g.V != K.V || g.W != K.W) throw ConfigError("kernel and grid dimensions differ");
  K.contrast.resize(g.M());
  for (int i = 0; i < g.M(); ++i) K.contrast[i] = g.contrast(i);
  K.ident.assign(K.lags(), 0.0);
  for (int k = 0; k <= K.ell && k < 2; ++k) K.ident[k] = gram(k);
}

InteractionKernel assemble_kernel(const VoxelGrid& g, double dt, const QuadratureSpec& spec) {
  if (!(spec.tolerance > 0)) throw ConfigError("quadrature tolerance must be positive");
  InteractionKernel K;
  K.U = g.U;
  K.V = g.V;
  K.W = g.W;
  K.dx = g.dx;
  K.dy = g.dy;
  K.dz = g.dz;
  K.dt = dt;
  K.ell = lag_count(g, dt);
  K.tolerance = spec.tolerance;
  attach_grid(K, g);

  const double h = c0 * dt;
  const std::array<double, 3> a{g.dx / h, g.dy / h, g.dz / h};
  const std::array<int, 3> N{g.U, g.V, g.W};
  const double vol = a[0] * a[1] * a[2];
  const int L = K.lags();
  // per-piece target, well below the element tolerance
  const double tol = vol * std::min(spec.tolerance, 1e-10) * 1e-3;

  // parallel-face tables, one per normal axis: (|j|, |op|, |oq|)
  std::array<Table, 3> F;
  // perpendicular tables for (0,1), (0,2), (1,2): (cell b, cell a, |og|)
  static constexpr int pb[3] = {0, 0, 1}, pa[3] = {1, 2, 2};
  std::array<Table, 3> H;
  struct Job {
    int table;  // 0..2 parallel, 3..5 perpendicular
    int i, j, k;
  };
  std::vector<Job> jobs;
  for (int gax = 0; gax < 3; ++gax) {
    const int p = gax == 0 ? 1 : 0, q = gax == 2 ? 1 : 2;
    F[gax].dims = {N[gax] + 1, N[p], N[q]};
    F[gax].stride = L;
    for (int i = 0; i <= N[gax]; ++i)
      for (int j = 0; j < N[p]; ++j)
        for (int k = 0; k < N[q]; ++k) jobs.push_back({gax, i, j, k});
  }
  for (int t = 0; t < 3; ++t) {
    const int gax = 3 - pb[t] - pa[t];
    H[t].dims = {N[pb[t]], N[pa[t]], N[gax]};
    H[t].stride = L;
    for (int i = 0; i < N[pb[t]]; ++i)
      for (int j = 0; j < N[pa[t]]; ++j)
        for (int k = 0; k < N[gax]; ++k) jobs.push_back({3 + t, i, j, k});
  }
  for (auto& T : F) {
    const std::size_t n = static_cast<std::size_t>(T.dims[0]) * T.dims[1] * T.dims[2];
    T.lags.assign(n * L, 0.0);
    T.err.assign(n, 0.0);
  }
  for (auto& T : H) {
    const std::size_t n = static_cast<std::size_t>(T.dims[0]) * T.dims[1] * T.dims[2];
    T.lags.assign(n * L, 0.0);
    T.err.assign(n, 0.0);
  }

  std::mutex fail_mu;
  std::string failure;
  parallel_dynamic(jobs.size(), [&](std::size_t idx) {
    const Job& jb = jobs[idx];
    try {
      if (jb.table < 3) {
        const int gax = jb.table;
        const int p = gax == 0 ? 1 : 0, q = gax == 2 ? 1 : 2;
        Table& T = F[gax];
        const std::size_t e = T.index(jb.i, jb.j, jb.k);
        const auto r = parallel_entry(jb.i * a[gax], jb.j * a[p], a[p], jb.k * a[q], a[q], K.ell,
                                      tol, spec.max_level, T.lags.data() + e * L);
        T.err[e] = r.err;
      } else {
        const int t = jb.table - 3;
        const int b = pb[t], al = pa[t], gax = 3 - b - al;
        Table& T = H[t];
        const std::size_t e = T.index(jb.i, jb.j, jb.k);
        const auto r = perpendicular_entry(jb.i * a[b], (jb.i + 1) * a[b], jb.j * a[al],
                                           (jb.j + 1) * a[al], jb.k * a[gax], a[gax], K.ell, tol,
                                           spec.max_level, T.lags.data() + e * L);
        T.err[e] = r.err;
      }
    } catch (const std::exception& ex) {
      std::lock_guard<std::mutex> lock(fail_mu);
      if (failure.empty()) failure = ex.what();
    }
  });
  if (!failure.empty()) throw ConfigError(failure);

  // combine face tables into the kernel
  const int noff = K.noff();
  K.values.assign(static_cast<std::size_t>(kPairs) * noff * L, 0.0);
  const double inv_vol = 1.0 / vol;
  std::vector<double> worst(noff, 0.0);
  parallel_for(static_cast<std::size_t>(noff), [&](std::size_t b0, std::size_t e0) {
    std::vector<double> dgg(3 * L);
    for (std::size_t oi = b0; oi < e0; ++oi) {
      const auto o = K.offset_of(static_cast<int>(oi));
      double werr = 0.0;
      std::array<double, 3> gerr{};
      for (int gax = 0; gax < 3; ++gax) {
        const int p = gax == 0 ? 1 : 0, q = gax == 2 ? 1 : 2;
        const int op = std::abs(o[p]), oq = std::abs(o[q]);
        const Table& T = F[gax];
        const double* f0 = T.at(std::abs(o[gax]), op, oq);
        const double* fp = T.at(std::abs(o[gax] + 1), op, oq);
        const double* fm = T.at(std::abs(o[gax] - 1), op, oq);
        for (int k = 0; k < L; ++k) dgg[gax * L + k] = 2.0 * f0[k] - fp[k] - fm[k];
        gerr[gax] = 2.0 * T.err_at(std::abs(o[gax]), op, oq) +
                    T.err_at(std::abs(o[gax] + 1), op, oq) + T.err_at(std::abs(o[gax] - 1), op, oq);
      }
      for (int b = 0; b < 3; ++b) {
        double* out = K.lag_row(pair_index(b, b), static_cast<int>(oi));
        double e = 0.0;
        for (int gax = 0; gax < 3; ++gax) {
          if (gax == b) continue;
          for (int k = 0; k < L; ++k) out[k] += inv_vol * dgg[gax * L + k];
          e += gerr[gax];
        }
        werr = std::max(werr, e * inv_vol);
      }
      for (int t = 0; t < 3; ++t) {
        const int b = pb[t], al = pa[t], gax = 3 - b - al;
        const Table& T = H[t];
        const int og = std::abs(o[gax]);
        const int ib[2] = {cell(o[b]), cell(o[b] - 1)};
        const int ja[2] = {cell(o[al] - 1), cell(o[al])};
        // D = H(ob, oa-1) - H(ob, oa) - H(ob-1, oa-1) + H(ob-1, oa)
        const double sgn[2][2] = {{1.0, -1.0}, {-1.0, 1.0}};
        double* out = K.lag_row(pair_index(b, al), static_cast<int>(oi));
        double e = 0.0;
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v) {
            const double* hv = T.at(ib[u], ja[v], og);
            const double c = -inv_vol * sgn[u][v];
            for (int k = 0; k < L; ++k) out[k] += c * hv[k];
            e += T.err_at(ib[u], ja[v], og);
          }
        werr = std::max(werr, e * inv_vol);
      }
      worst[oi] = werr;
    }
  });
  int worst_oi = 0;
  for (int oi = 0; oi < noff; ++oi)
    if (worst[oi] > worst[worst_oi]) worst_oi = oi;
  K.max_error_estimate = worst[worst_oi];
  if (K.max_error_estimate > spec.tolerance) {
    const auto o = K.offset_of(worst_oi);
    // report the lag with the largest magnitude at that offset
    int kk = 0;
    double best = -1;
    for (int p = 0; p < kPairs; ++p)
      for (int k = 0; k < L; ++k)
        if (std::abs(K.lag_row(p, worst_oi)[k]) > best) best = std::abs(K.lag_row(p, worst_oi)[k]), kk = k;
    std::ostringstream msg;
    msg << "kernel quadrature did not reach tolerance " << spec.tolerance << " (estimate "
        << K.max_error_estimate << ") at offset (" << o[0] << "," << o[1] << "," << o[2]
        << "), lag " << kk;
    throw NumericalError(msg.str());
  }
  return K;
}

}  // namespace motjvie

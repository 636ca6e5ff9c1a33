#include "motjvie/stability.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "motjvie/common.hpp"
#include "motjvie/toeplitz.hpp"

namespace motjvie {

double FirFilter::alternating_sum() const {
  double s = 0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) s += (n % 2 ? -1.0 : 1.0) * coeffs[n];
  return s;
}

double FirFilter::magnitude(double theta) const {
  std::complex<double> s = 0;
  for (std::size_t n = 0; n < coeffs.size(); ++n)
    s += coeffs[n] * std::polar(1.0, -static_cast<double>(n) * theta);
  return std::abs(s);
}

FirFilter make_fir(int order, double delta, bool fir4_plus_last_tap) {
  if (!(delta >= 0)) throw ConfigError("regularization delta must be non-negative");
  FirFilter f;
  f.order = order;
  f.delta = delta;
  switch (order) {
    case 2:
      f.coeffs = {0.5, -0.5};
      break;
    case 3:
      f.coeffs = {0.25, -0.5, 0.25};
      break;
    case 4:
      f.coeffs = {0.125, -0.375, 0.375, fir4_plus_last_tap ? 0.125 : -0.125};
      break;
    default:
      throw ConfigError("FIR order must be 2, 3 or 4");
  }
  for (double& c : f.coeffs) c *= delta;
  return f;
}

double fir_closed_form(int order, double delta, double theta) {
  return delta * std::pow(std::sin(0.5 * theta), order - 1);
}

double recommend_delta(std::size_t M) {
  if (M < 1) throw ConfigError("grid must have at least one voxel");
  return 1e-7 * static_cast<double>(M);
}

InteractionKernel regularize(const InteractionKernel& K, const FirFilter& f) {
  if (static_cast<int>(f.coeffs.size()) - 1 > K.ell)
    throw ConfigError("FIR filter is longer than the kernel");
  InteractionKernel R = K;
  if (R.ident.size() < f.coeffs.size()) R.ident.resize(f.coeffs.size(), 0.0);
  for (std::size_t n = 0; n < f.coeffs.size(); ++n) R.ident[n] += f.coeffs[n];
  return R;
}

InteractionKernel inject_truncation(const InteractionKernel& K, double eps) {
  if (!(eps > 0)) throw ConfigError("truncation step must be positive");
  InteractionKernel T = K;
  for (double& v : T.values) {
    const double q = v / eps;
    if (std::abs(q) < 4503599627370496.0) v = eps * std::nearbyint(q);
  }
  return T;
}

std::vector<double> pdsa_weights(int ell, int n, double* log_scale) {
  if (n < 0 || n > ell) throw ConfigError("PDSA index must lie in [0, ell]");
  std::vector<double> lg(n + 1);
  double mx = -INFINITY;
  for (int j = 0; j <= n; ++j) {
    const int N = ell - j, k = ell - n;
    lg[j] = std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0);
    mx = std::max(mx, lg[j]);
  }
  if (log_scale) *log_scale = mx;
  std::vector<double> w(n + 1);
  for (int j = 0; j <= n; ++j) w[j] = (j % 2 ? -1.0 : 1.0) * std::exp(lg[j] - mx);
  return w;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::positive_definite:
      return "positive_definite";
    case Verdict::semidefinite:
      return "semidefinite";
    case Verdict::indefinite:
      return "indefinite";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

namespace {

// Weighted identity coefficient and lag-summed kernel of D_n.
struct Combined {
  double a = 0;
  std::vector<double> S;  // [pair][offset]
  std::vector<double> sqrtC;
};

Combined combine(const InteractionKernel& K, int n) {
  const auto w = pdsa_weights(K.ell, n);
  Combined c;
  for (int j = 0; j <= n && j < static_cast<int>(K.ident.size()); ++j) c.a += w[j] * K.ident[j];
  c.S.assign(static_cast<std::size_t>(kPairs) * K.noff(), 0.0);
  for (int p = 0; p < kPairs; ++p)
    for (int oi = 0; oi < K.noff(); ++oi) {
      const double* row = K.lag_row(p, oi);
      double s = 0;
      for (int j = 0; j <= n; ++j) s += w[j] * row[j];
      c.S[static_cast<std::size_t>(p) * K.noff() + oi] = s;
    }
  c.sqrtC.resize(K.M());
  for (int m = 0; m < K.M(); ++m) c.sqrtC[m] = std::sqrt(K.contrast.at(m));
  return c;
}

Verdict classify(double lmin, double scale) {
  const double floor = 1e-13 * scale;
  if (lmin > floor) return Verdict::positive_definite;
  if (lmin < -floor) return Verdict::indefinite;
  return Verdict::semidefinite;
}

PdsaEntry dense_check(const InteractionKernel& K, int n) {
  PdsaEntry e;
  e.n = n;
  e.method = "dense";
  const Eigen::MatrixXd D = pdsa_dense_matrix(K, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return e;
  e.lambda_min = es.eigenvalues().minCoeff();
  e.lambda_max = es.eigenvalues().maxCoeff();
  const double scale = std::max(std::abs(e.lambda_min), std::abs(e.lambda_max));
  e.verdict = classify(e.lambda_min, scale);
  // an attempted Cholesky factorization settles borderline cases
  if (e.verdict != Verdict::indefinite) {
    Eigen::LLT<Eigen::MatrixXd> llt(D);
    if (llt.info() == Eigen::Success && e.lambda_min > 0)
      e.verdict = Verdict::positive_definite;
    else if (e.verdict == Verdict::positive_definite)
      e.verdict = Verdict::semidefinite;
  }
  return e;
}

class DnOperator {
 public:
  DnOperator(const InteractionKernel& K, int n)
      : K_(K), c_(combine(K, n)), emb_({K.W, K.V, K.U}, {K.W, K.V, K.U}) {
    ns_ = emb_.spectrum_size();
    spec_.assign(kPairs * ns_, Complex{});
    for (int p = 0; p < kPairs; ++p)
      emb_.spectrum(
          [&](const int* d) {
            return c_.S[static_cast<std::size_t>(p) * K.noff() + K.offset_index(d[2], d[1], d[0])];
          },
          spec_.data() + p * ns_);
    xh_.assign(3 * ns_, Complex{});
    acc_.assign(ns_, Complex{});
    tmp_.assign(K.M(), 0.0);
  }
  int size() const { return 3 * K_.M(); }
  void apply(const double* x, double* y) {
    const int M = K_.M();
    for (int a = 0; a < 3; ++a) {
      for (int m = 0; m < M; ++m) tmp_[m] = c_.sqrtC[m] * x[a * M + m];
      emb_.forward(tmp_.data(), xh_.data() + a * ns_);
    }
    for (int b = 0; b < 3; ++b) {
      std::fill(acc_.begin(), acc_.end(), Complex{});
      for (int a = 0; a < 3; ++a)
        multiply_accumulate(spec_.data() + pair_index(b, a) * ns_, xh_.data() + a * ns_,
                            acc_.data(), ns_);
      emb_.inverse(acc_.data(), tmp_.data());
      for (int m = 0; m < M; ++m) y[b * M + m] = c_.a * x[b * M + m] - c_.sqrtC[m] * tmp_[m];
    }
  }

 private:
  const InteractionKernel& K_;
  Combined c_;
  CirculantEmbedding emb_;
  std::size_t ns_ = 0;
  std::vector<Complex> spec_, xh_, acc_;
  std::vector<double> tmp_;
};

// |P|^-1 for the block circulant P = a I - c_mean chan(S), the optimal
// circulant (Chan) approximation per axis. Each frequency carries a 3x3
// symmetric block; eigenvalues below floor * max are clamped.
class ChanPreconditioner {
 public:
  ChanPreconditioner(const InteractionKernel& K, const Combined& c, double floor)
      : M_(K.M()), fft_({K.W, K.V, K.U}) {
    const std::size_t nf = fft_.spectrum_size();
    double cmean = 0;
    for (double s : c.sqrtC) cmean += s * s;
    cmean /= M_;
    std::vector<double> gen(M_);
    std::vector<Complex> tmp(nf);
    std::vector<std::vector<double>> sym(kPairs, std::vector<double>(nf));
    const int N[3] = {K.U, K.V, K.W};
    for (int p = 0; p < kPairs; ++p) {
      for (int m = 0; m < M_; ++m) {
        const int J[3] = {m % K.U, (m / K.U) % K.V, m / (K.U * K.V)};
        double s = 0;
        // t(j) weighted (n - j)/n plus its wrapped partner t(j - n) weighted j/n
        for (int corner = 0; corner < 8; ++corner) {
          double wt = 1;
          int d[3];
          for (int ax = 0; ax < 3 && wt != 0; ++ax) {
            if ((corner >> ax) & 1) {
              d[ax] = J[ax] - N[ax];
              wt *= static_cast<double>(J[ax]) / N[ax];
            } else {
              d[ax] = J[ax];
              wt *= static_cast<double>(N[ax] - J[ax]) / N[ax];
            }
          }
          if (wt != 0) s += wt * c.S[static_cast<std::size_t>(p) * K.noff() + K.offset_index(d[0], d[1], d[2])];
        }
        gen[m] = s;
      }
      fft_.forward(gen.data(), tmp.data());
      for (std::size_t i = 0; i < nf; ++i) sym[p][i] = tmp[i].real();  // even generator
    }
    std::vector<Eigen::Vector3d> vals(nf);
    std::vector<Eigen::Matrix3d> vecs(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      Eigen::Matrix3d P;
      for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a) P(b, a) = (a == b ? c.a : 0.0) - cmean * sym[pair_index(b, a)][i];
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(P);
      vals[i] = es.eigenvalues();
      vecs[i] = es.eigenvectors();
      scale_ = std::max(scale_, vals[i].cwiseAbs().maxCoeff());
    }
    inv_.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      Eigen::Vector3d d;
      for (int k = 0; k < 3; ++k) d[k] = 1.0 / std::max(std::abs(vals[i][k]), floor * scale_);
      inv_[i] = vecs[i] * d.asDiagonal() * vecs[i].transpose();
    }
    xh_.resize(3 * nf);
    acc_.resize(nf);
  }

  // largest |eigenvalue| of the circulant, an estimate of the operator norm
  double scale() const { return scale_; }

  void apply(const double* x, double* y) {
    const std::size_t nf = acc_.size();
    for (int a = 0; a < 3; ++a) fft_.forward(x + static_cast<std::size_t>(a) * M_, xh_.data() + a * nf);
    for (int b = 0; b < 3; ++b) {
      for (std::size_t i = 0; i < nf; ++i)
        acc_[i] = inv_[i](b, 0) * xh_[i] + inv_[i](b, 1) * xh_[nf + i] + inv_[i](b, 2) * xh_[2 * nf + i];
      fft_.inverse(acc_.data(), y + static_cast<std::size_t>(b) * M_);
    }
  }

 private:
  int M_;
  CyclicTransform fft_;
  double scale_ = 0;
  std::vector<Eigen::Matrix3d> inv_;
  std::vector<Complex> xh_, acc_;
};

// Orthonormalises the columns of S (two Gram-Schmidt passes), applying the
// same column operations to AS = A S. Numerically dependent columns are
// dropped from both. Columns that lost most of their norm carry amplified
// rounding in AS; their new indices go to stale. ref is the norm the
// columns were formed from, when they come out of a cancellation already.
void orthonormalize(Eigen::MatrixXd& S, Eigen::MatrixXd& AS, std::vector<int>* stale = nullptr,
                    double ref = 0) {
  std::vector<int> keep;
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    const double n0 = std::max(S.col(j).norm(), ref);
    for (int pass = 0; pass < 2; ++pass)
      for (int k : keep) {
        const double c = S.col(k).dot(S.col(j));
        S.col(j) -= c * S.col(k);
        AS.col(j) -= c * AS.col(k);
      }
    const double n1 = S.col(j).norm();
    if (n1 > 1e-10 * n0 && n1 > 0) {
      S.col(j) /= n1;
      AS.col(j) /= n1;
      if (stale && n1 < 1e-3 * n0) stale->push_back(static_cast<int>(keep.size()));
      keep.push_back(static_cast<int>(j));
    }
  }
  Eigen::MatrixXd Q(S.rows(), static_cast<Eigen::Index>(keep.size())), AQ(AS.rows(), Q.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    Q.col(static_cast<Eigen::Index>(i)) = S.col(keep[i]);
    AQ.col(static_cast<Eigen::Index>(i)) = AS.col(keep[i]);
  }
  S.swap(Q);
  AS.swap(AQ);
}

// Block LOBPCG for the smallest eigenvalue of D_n. Images under D are
// carried through the basis updates, so each iteration costs one product
// per block column; they are recomputed exactly every 50 iterations.
PdsaEntry lobpcg_check(const InteractionKernel& K, int n, const MatrixFreeOptions& opt) {
  using Mat = Eigen::MatrixXd;
  PdsaEntry e;
  e.n = n;
  e.method = "matrix_free";
  DnOperator op(K, n);
  ChanPreconditioner T(K, combine(K, n), opt.floor);
  const int N = op.size();
  const double scale = T.scale() > 0 ? T.scale() : 1.0;
  e.lambda_max = T.scale();
  const int bs = std::max(1, std::min(opt.block, N / 3));

  auto apply = [](auto& f, const Mat& A) {
    Mat B(A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) f.apply(A.col(j).data(), B.col(j).data());
    return B;
  };
  std::vector<int> stale;
  auto orthonormalize_fresh = [&](Mat& S, Mat& AS, double ref) {
    stale.clear();
    orthonormalize(S, AS, &stale, ref);
    for (int j : stale) op.apply(S.col(j).data(), AS.col(j).data());
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  Mat X(N, bs);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < bs; ++j) X(i, j) = gauss(rng);
  Mat AX = apply(op, X);
  orthonormalize(X, AX);
  Mat P(N, 0), AP(N, 0);

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (it % 50 == 49) AX = apply(op, X);
    Mat G = X.transpose() * AX;
    G = 0.5 * (G + G.transpose()).eval();
    if (!G.allFinite()) throw NumericalError("PDSA: non-finite Rayleigh-Ritz matrix");
    Eigen::SelfAdjointEigenSolver<Mat> small(G);
    X = X * small.eigenvectors();
    AX = AX * small.eigenvectors();
    const Eigen::VectorXd theta = small.eigenvalues();
    const Mat R = AX - X * theta.asDiagonal();
    const double res = R.col(0).norm();
    e.iterations = it + 1;
    e.lambda_min = theta[0];
    // a Rayleigh quotient below zero is proof of indefiniteness
    if (theta[0] < -1e-10 * scale) {
      e.lambda_min = X.col(0).dot(apply(op, Mat(X.col(0))).col(0));
      if (e.lambda_min < -1e-10 * scale) {
        e.verdict = Verdict::indefinite;
        return e;
      }
    }
    // an eigenvalue lies within res of theta
    if (opt.stop_at_verdict && theta[0] - res > 0) {
      e.verdict = Verdict::positive_definite;
      return e;
    }
    if (res <= opt.tolerance * scale) {
      e.verdict = theta[0] - res > 0 ? Verdict::positive_definite : classify(theta[0], scale);
      return e;
    }
    Mat W = opt.precondition ? apply(T, R) : R;
    // W and P are made orthogonal to X; [X W P] is then orthonormal
    W -= X * (X.transpose() * W);
    Mat AW = apply(op, W);
    Mat S(N, X.cols() + W.cols() + P.cols()), AS(N, S.cols());
    S << X, W, P;
    AS << AX, AW, AP;
    orthonormalize_fresh(S, AS, 0.0);
    Mat H = S.transpose() * AS;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const Mat C = es.eigenvectors().leftCols(std::min<Eigen::Index>(bs, S.cols()));
    Mat Xn = S * C, AXn = AS * C;
    // the new search direction is the part of Xn outside the old X
    const Mat proj = X.transpose() * Xn;
    P = Xn - X * proj;
    AP = AXn - AX * proj;
    orthonormalize_fresh(P, AP, 1.0);  // Xn has unit columns
    X.swap(Xn);
    AX.swap(AXn);
  }
  e.verdict = Verdict::inconclusive;
  return e;
}

}  // namespace

Eigen::MatrixXd pdsa_dense_matrix(const InteractionKernel& K, int n) {
  const int M = K.M();
  if (3 * M > 10000) throw ConfigError("dense PDSA is limited to 3M <= 10000");
  const Combined c = combine(K, n);
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(3 * M, 3 * M) * c.a;
  for (int m = 0; m < M; ++m) {
    if (c.sqrtC[m] == 0) continue;
    const int u = m % K.U, v = (m / K.U) % K.V, w = m / (K.U * K.V);
    for (int mp = 0; mp < M; ++mp) {
      if (c.sqrtC[mp] == 0) continue;
      const int up = mp % K.U, vp = (mp / K.U) % K.V, wp = mp / (K.U * K.V);
      const int oi = K.offset_index(u - up, v - vp, w - wp);
      const double s = c.sqrtC[m] * c.sqrtC[mp];
      for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a)
          D(b * M + m, a * M + mp) -= s * c.S[static_cast<std::size_t>(pair_index(b, a)) * K.noff() + oi];
    }
  }
  return D;
}

PdsaReport pdsa_check(const InteractionKernel& K, const std::vector<int>& n_list,
                      PdsaMethod method, const MatrixFreeOptions& opt) {
  PdsaReport rep;
  const bool dense = method == PdsaMethod::dense ||
                     (method == PdsaMethod::automatic && 3 * K.M() <= 3000);
  for (int n : n_list) {
    if (n < 0 || n > K.ell) throw ConfigError("PDSA index " + std::to_string(n) + " outside [0, ell]");
    const auto t0 = std::chrono::steady_clock::now();
    PdsaEntry e = dense ? dense_check(K, n) : lobpcg_check(K, n, opt);
    pdsa_weights(K.ell, n, &e.log_scale);
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.entries.push_back(e);
  }
  return rep;
}

std::string PdsaReport::text() const {
  std::ostringstream os;
  os << "# n verdict lambda_min lambda_max method iterations seconds\n";
  os.precision(10);
  for (const auto& e : entries)
    os << e.n << ' ' << verdict_name(e.verdict) << ' ' << e.lambda_min << ' ' << e.lambda_max << ' '
       << e.method << ' ' << e.iterations << ' ' << e.seconds << "\n";
  return os.str();
}

}  // namespace motjvie

#include "motjvie/march.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <climits>
#include <cmath>
#include <cstring>
#include <fstream>

#include "motjvie/common.hpp"
#include "motjvie/hier.hpp"
#include "motjvie/toeplitz.hpp"

namespace motjvie {

namespace {

template <class T>
void put_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void get_raw(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("checkpoint: truncated file");
}

}  // namespace

JRing::JRing(int capacity, int size)
    : size_(size), step_(capacity, INT_MIN), data_(static_cast<std::size_t>(capacity) * size, 0.0) {}

const double* JRing::get(int n) const {
  const int c = capacity();
  if (c == 0) return nullptr;
  const int slot = ((n % c) + c) % c;
  return step_[slot] == n ? data_.data() + static_cast<std::size_t>(slot) * size_ : nullptr;
}

double* JRing::put(int n) {
  const int c = capacity();
  const int slot = ((n % c) + c) % c;
  step_[slot] = n;
  return data_.data() + static_cast<std::size_t>(slot) * size_;
}

void JRing::clear() {
  std::fill(step_.begin(), step_.end(), INT_MIN);
  std::fill(data_.begin(), data_.end(), 0.0);
}

void JRing::save(std::ostream& os) const {
  const int32_t c = capacity(), s = size_;
  put_raw(os, c);
  put_raw(os, s);
  os.write(reinterpret_cast<const char*>(step_.data()), sizeof(int) * step_.size());
  os.write(reinterpret_cast<const char*>(data_.data()), sizeof(double) * data_.size());
}

void JRing::load(std::istream& is) {
  int32_t c = 0, s = 0;
  get_raw(is, c);
  get_raw(is, s);
  if (c != capacity() || s != size_) throw ConfigError("checkpoint: ring size mismatch");
  is.read(reinterpret_cast<char*>(step_.data()), sizeof(int) * step_.size());
  is.read(reinterpret_cast<char*>(data_.data()), sizeof(double) * data_.size());
  if (!is) throw ConfigError("checkpoint: truncated ring");
}

EngineKind parse_engine(const std::string& s) {
  if (s == "direct") return EngineKind::direct;
  if (s == "spatial") return EngineKind::spatial;
  if (s == "hierarchical" || s == "hier") return EngineKind::hierarchical;
  throw ConfigError("unknown engine '" + s + "' (direct, spatial, hierarchical)");
}

std::string engine_name(EngineKind e) {
  switch (e) {
    case EngineKind::direct:
      return "direct";
    case EngineKind::spatial:
      return "spatial";
    case EngineKind::hierarchical:
      return "hierarchical";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// direct summation

namespace {

class DirectEngine : public HistoryEngine {
 public:
  explicit DirectEngine(const InteractionKernel& K) : K_(K) {
    // nonzero lag window per (pair, offset), lags >= 1 only
    for (int p = 0; p < kPairs; ++p)
      for (int oi = 0; oi < K.noff(); ++oi) {
        const double* row = K.lag_row(p, oi);
        int lo = -1, hi = -1;
        for (int k = 1; k <= K.ell; ++k)
          if (row[k] != 0.0) {
            if (lo < 0) lo = k;
            hi = k;
          }
        if (lo > 0) cells_.push_back({p, oi, lo, hi});
      }
  }
  std::string name() const override { return "direct"; }

  void history(int n, const JRing& ring, std::vector<double>& Q) override {
    std::fill(Q.begin(), Q.end(), 0.0);
    const int U = K_.U, V = K_.V, W = K_.W;
    const std::size_t M = K_.M();
    parallel_for(W, [&](std::size_t w0, std::size_t w1) {
      for (const Cell& c : cells_) {
        const auto o = K_.offset_of(c.offset);
        const int wlo = std::max<int>(w0, o[2]), whi = std::min<int>(w1, W + o[2]);
        if (wlo >= whi) continue;
        const int vlo = std::max(0, o[1]), vhi = std::min(V, V + o[1]);
        const int ulo = std::max(0, o[0]), uhi = std::min(U, U + o[0]);
        const double* row = K_.lag_row(c.pair, c.offset);
        for (int k = c.lo; k <= c.hi; ++k) {
          const double s = row[k];
          if (s == 0.0) continue;
          const double* J = ring.get(n - k);
          if (!J) continue;
          // both orderings of the unordered pair
          for (int t = 0; t < 2; ++t) {
            int beta, alpha;
            pair_components(c.pair, t, beta, alpha);
            if (beta < 0) continue;
            double* q = Q.data() + beta * M;
            const double* j = J + alpha * M;
            for (int w = wlo; w < whi; ++w)
              for (int v = vlo; v < vhi; ++v) {
                double* qr = q + (static_cast<std::size_t>(w) * V + v) * U;
                const double* jr = j + (static_cast<std::size_t>(w - o[2]) * V + (v - o[1])) * U - o[0];
                for (int u = ulo; u < uhi; ++u) qr[u] += s * jr[u];
              }
          }
        }
      }
    });
  }

 private:
  struct Cell {
    int pair, offset, lo, hi;
  };
  // Off-diagonal pairs act in both orders with the same values.
  void pair_components(int pair, int t, int& beta, int& alpha) const {
    static constexpr int comp[kPairs][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    if (pair < 3) {
      beta = t == 0 ? comp[pair][0] : -1;
      alpha = comp[pair][1];
      return;
    }
    beta = comp[pair][t];
    alpha = comp[pair][1 - t];
  }
  const InteractionKernel& K_;
  std::vector<Cell> cells_;
};

}  // namespace

std::unique_ptr<HistoryEngine> make_direct_engine(const InteractionKernel& K) {
  return std::make_unique<DirectEngine>(K);
}

// ---------------------------------------------------------------------------
// spatial FFT

namespace {

class SpatialEngine : public HistoryEngine {
 public:
  explicit SpatialEngine(const InteractionKernel& K)
      : K_(K), emb_({K.W, K.V, K.U}, {K.W, K.V, K.U}) {
    ns_ = emb_.spectrum_size();
    spectra_.assign(static_cast<std::size_t>(K.ell) * kPairs * ns_, Complex{});
    for (int k = 1; k <= K.ell; ++k)
      for (int p = 0; p < kPairs; ++p) {
        bool any = false;
        for (int oi = 0; oi < K.noff() && !any; ++oi) any = K.lag_row(p, oi)[k] != 0.0;
        nonzero_.push_back(any);
        if (!any) continue;
        const auto [b, a] = components(p);
        emb_.spectrum(
            [&, b = b, a = a](const int* d) { return K.S(b, a, d[2], d[1], d[0], k); },
            spec(k, p));
      }
    jhat_.assign(static_cast<std::size_t>(K.ell) * 3 * ns_, Complex{});
    slot_step_.assign(K.ell, INT_MIN);
    acc_.assign(ns_, Complex{});
  }
  std::string name() const override { return "spatial"; }

  void on_solved(int n, const JRing& ring) override { transform(n, ring); }

  void restore(int n, const JRing& ring) override {
    std::fill(slot_step_.begin(), slot_step_.end(), INT_MIN);
    for (int m = n - K_.ell + 1; m <= n; ++m)
      if (ring.get(m)) transform(m, ring);
  }

  void history(int n, const JRing&, std::vector<double>& Q) override {
    const std::size_t M = K_.M();
    for (int beta = 0; beta < 3; ++beta) {
      std::fill(acc_.begin(), acc_.end(), Complex{});
      bool any = false;
      for (int k = 1; k <= K_.ell; ++k) {
        const Complex* jh = jhat(n - k);
        if (!jh) continue;
        for (int alpha = 0; alpha < 3; ++alpha) {
          const int p = pair_index(beta, alpha);
          if (!nonzero_[(k - 1) * kPairs + p]) continue;
          const Complex* kh = spec(k, p);
          const Complex* x = jh + alpha * ns_;
          parallel_for(ns_, [&](std::size_t b0, std::size_t b1) {
            for (std::size_t i = b0; i < b1; ++i) acc_[i] += kh[i] * x[i];
          });
          any = true;
        }
      }
      double* q = Q.data() + beta * M;
      if (!any) {
        std::fill(q, q + M, 0.0);
        continue;
      }
      emb_.inverse(acc_.data(), q);
    }
  }

  std::size_t memory_bytes() const override {
    return (spectra_.size() + jhat_.size() + acc_.size()) * sizeof(Complex);
  }

 private:
  static std::pair<int, int> components(int p) {
    static constexpr int comp[kPairs][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    return {comp[p][0], comp[p][1]};
  }
  Complex* spec(int k, int p) {
    return spectra_.data() + (static_cast<std::size_t>(k - 1) * kPairs + p) * ns_;
  }
  const Complex* jhat(int n) const {
    const int slot = ((n % K_.ell) + K_.ell) % K_.ell;
    return slot_step_[slot] == n ? jhat_.data() + static_cast<std::size_t>(slot) * 3 * ns_
                                 : nullptr;
  }
  void transform(int n, const JRing& ring) {
    const double* J = ring.get(n);
    const int slot = ((n % K_.ell) + K_.ell) % K_.ell;
    slot_step_[slot] = INT_MIN;
    if (!J) return;
    Complex* dst = jhat_.data() + static_cast<std::size_t>(slot) * 3 * ns_;
    for (int a = 0; a < 3; ++a) emb_.forward(J + static_cast<std::size_t>(a) * K_.M(), dst + a * ns_);
    slot_step_[slot] = n;
  }

  const InteractionKernel& K_;
  CirculantEmbedding emb_;
  std::size_t ns_ = 0;
  std::vector<Complex> spectra_, jhat_, acc_;
  std::vector<bool> nonzero_;
  std::vector<int> slot_step_;
};

}  // namespace

std::unique_ptr<HistoryEngine> make_spatial_engine(const InteractionKernel& K) {
  return std::make_unique<SpatialEngine>(K);
}

std::unique_ptr<HistoryEngine> make_engine(EngineKind kind, const InteractionKernel& K) {
  switch (kind) {
    case EngineKind::direct:
      return make_direct_engine(K);
    case EngineKind::spatial:
      return make_spatial_engine(K);
    case EngineKind::hierarchical:
      return make_hierarchical_engine(K);
  }
  throw ConfigError("unknown engine");
}

// ---------------------------------------------------------------------------
// lag-0 solve

struct Z0Solver::Impl {
  Eigen::SparseMatrix<double> A;     // scatterer block, scaled by 1/C
  Eigen::SparseMatrix<double> Asb;   // -S0 coupling scatterer rows to background columns
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  Eigen::SparseMatrix<double> full;  // Z0 itself, for residuals
};

Z0Solver::Z0Solver(const InteractionKernel& K, const Options& opt)
    : impl_(std::make_unique<Impl>()), K_(K) {
  const int M = K.M();
  if (static_cast<int>(K.contrast.size()) != M)
    throw ConfigError("Z0: kernel has no contrast attached");
  const double id0 = K.ident.empty() ? 0.0 : K.ident[0];
  if (!(id0 > 0)) throw NumericalError("Z0: non-positive identity coefficient at lag 0");

  // unknown numbering: scatterer unknowns first in order, then background
  std::vector<int> local(3 * M, -1), back(3 * M, -1);
  int nb = 0;
  for (int b = 0; b < 3; ++b)
    for (int m = 0; m < M; ++m) {
      if (K.contrast[m] > 0) {
        local[b * M + m] = static_cast<int>(scat_.size());
        scat_.push_back(b * M + m);
      } else {
        back[b * M + m] = nb++;
      }
    }

  // lag-0 offsets with any nonzero value
  std::vector<int> offs;
  for (int oi = 0; oi < K.noff(); ++oi)
    for (int p = 0; p < kPairs; ++p)
      if (K.lag_row(p, oi)[0] != 0.0) {
        offs.push_back(oi);
        break;
      }

  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> ta, tsb, tf;
  for (int b = 0; b < 3; ++b)
    for (int m = 0; m < M; ++m) {
      const int row = b * M + m;
      const double C = K.contrast[m];
      tf.emplace_back(row, row, id0);
      if (local[row] >= 0) ta.emplace_back(local[row], local[row], id0 / C);
      if (C == 0) continue;
      const auto um = std::array<int, 3>{m % K.U, (m / K.U) % K.V, m / (K.U * K.V)};
      for (int oi : offs) {
        const auto o = K.offset_of(oi);
        const int u = um[0] - o[0], v = um[1] - o[1], w = um[2] - o[2];
        if (u < 0 || u >= K.U || v < 0 || v >= K.V || w < 0 || w >= K.W) continue;
        const int mp = (w * K.V + v) * K.U + u;
        for (int a = 0; a < 3; ++a) {
          const double s = K.S(b, a, o[0], o[1], o[2], 0);
          if (s == 0.0) continue;
          const int col = a * M + mp;
          tf.emplace_back(row, col, -C * s);
          if (local[col] >= 0)
            ta.emplace_back(local[row], local[col], -s);
          else
            tsb.emplace_back(local[row], back[col], -s);
        }
      }
    }
  const int ns = static_cast<int>(scat_.size());
  impl_->A.resize(ns, ns);
  impl_->A.setFromTriplets(ta.begin(), ta.end());
  impl_->Asb.resize(ns, nb);
  impl_->Asb.setFromTriplets(tsb.begin(), tsb.end());
  impl_->full.resize(3 * M, 3 * M);
  impl_->full.setFromTriplets(tf.begin(), tf.end());

  if (ns == 0) return;
  direct_ = ns <= opt.max_direct;
  if (direct_) {
    impl_->ldlt.compute(impl_->A);
    if (impl_->ldlt.info() != Eigen::Success)
      throw NumericalError("Z0: factorization failed (singular lag-0 matrix)");
    const auto& D = impl_->ldlt.vectorD();
    for (int i = 0; i < D.size(); ++i)
      if (!(std::abs(D[i]) > 0) || !std::isfinite(D[i]))
        throw NumericalError("Z0: singular lag-0 matrix");
  } else {
    impl_->cg.setTolerance(opt.cg_tolerance);
    impl_->cg.setMaxIterations(10000);
    impl_->cg.compute(impl_->A);
  }
}

Z0Solver::~Z0Solver() = default;

std::size_t Z0Solver::nonzeros() const { return impl_->full.nonZeros(); }

Eigen::SparseMatrix<double> Z0Solver::matrix() const { return impl_->full; }

void Z0Solver::solve(const std::vector<double>& rhs, std::vector<double>& J) const {
  const int M = K_.M();
  const double id0 = K_.ident[0];
  J.assign(3 * M, 0.0);
  const int ns = static_cast<int>(scat_.size());
  Eigen::VectorXd jb(3 * M - ns);
  int nb = 0;
  std::size_t si = 0;
  for (int i = 0; i < 3 * M; ++i) {
    if (si < scat_.size() && scat_[si] == i) {
      ++si;
      continue;
    }
    J[i] = rhs[i] / id0;
    jb[nb++] = J[i];
  }
  if (ns == 0) return;
  Eigen::VectorXd r(ns);
  for (int i = 0; i < ns; ++i) r[i] = rhs[scat_[i]] / K_.contrast[scat_[i] % M];
  if (nb > 0) r -= impl_->Asb * jb;
  Eigen::VectorXd x;
  if (direct_) {
    x = impl_->ldlt.solve(r);
  } else {
    x = impl_->cg.solve(r);
    if (impl_->cg.info() != Eigen::Success)
      throw NumericalError("Z0: conjugate gradients did not converge");
  }
  for (int i = 0; i < ns; ++i) J[scat_[i]] = x[i];
}

double Z0Solver::residual(const std::vector<double>& J, const std::vector<double>& rhs) const {
  const Eigen::Map<const Eigen::VectorXd> j(J.data(), J.size()), r(rhs.data(), rhs.size());
  const double nr = r.norm();
  if (nr == 0) return (impl_->full * j).norm() == 0 ? 0.0 : INFINITY;
  return (impl_->full * j - r).norm() / nr;
}

// ---------------------------------------------------------------------------
// marcher

Marcher::Marcher(const InteractionKernel& K, const MarchOptions& opt)
    : K_(K), opt_(opt), ring_(K.ell, 3 * K.M()) {
  if (static_cast<int>(K.ident.size()) - 1 > K.ell)
    throw ConfigError("regularization filter is longer than the kernel");
  engine_ = make_engine(opt.engine, K);
  z0_ = std::make_unique<Z0Solver>(K, opt.z0);
  Q_.assign(3 * K.M(), 0.0);
}

Marcher::~Marcher() = default;

const std::vector<double>& Marcher::step(const std::vector<double>& E) {
  const std::size_t N = 3 * static_cast<std::size_t>(K_.M());
  if (E.size() != N) throw ConfigError("excitation length does not match the grid");
  const int n = n_ + 1;
  const auto t0 = std::chrono::steady_clock::now();
  engine_->history(n, ring_, Q_);
  history_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // rhs = E - sum_{k>=1} ident_k J_{n-k} + C Q
  rhs_ = E;
  for (int k = 1; k < static_cast<int>(K_.ident.size()); ++k) {
    const double c = K_.ident[k];
    const double* J = ring_.get(n - k);
    if (c == 0.0 || !J) continue;
    for (std::size_t i = 0; i < N; ++i) rhs_[i] -= c * J[i];
  }
  const std::size_t M = K_.M();
  for (int b = 0; b < 3; ++b)
    for (std::size_t m = 0; m < M; ++m) rhs_[b * M + m] += K_.contrast[m] * Q_[b * M + m];

  z0_->solve(rhs_, J_);
  const double res = z0_->residual(J_, rhs_);
  if (!(res <= opt_.residual_tolerance))
    throw NumericalError("step " + std::to_string(n) + ": lag-0 solve residual " +
                         std::to_string(res));
  for (double v : J_)
    if (!std::isfinite(v)) throw NumericalError("step " + std::to_string(n) + ": non-finite current");
  std::copy(J_.begin(), J_.end(), ring_.put(n));
  const auto t1 = std::chrono::steady_clock::now();
  engine_->on_solved(n, ring_);
  history_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
  n_ = n;
  return J_;
}

void Marcher::prefill(const std::vector<std::vector<double>>& past) {
  const int c = ring_.capacity();
  const int count = std::min<int>(c, past.size());
  for (int i = 0; i < count; ++i) {
    const int step = n_ - count + 1 + i;
    if (past[i].size() != static_cast<std::size_t>(ring_.size()))
      throw ConfigError("prefill: wrong vector length");
    std::copy(past[i].begin(), past[i].end(), ring_.put(step));
  }
  engine_->restore(n_, ring_);
}

namespace {
constexpr char kCheckpointMagic[8] = {'M', 'O', 'T', 'J', 'V', 'C', 'K', 'P'};
constexpr int32_t kCheckpointVersion = 1;
}  // namespace

void Marcher::save_checkpoint(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint " + path);
  os.write(kCheckpointMagic, 8);
  put_raw(os, kCheckpointVersion);
  const int32_t n = n_, U = K_.U, V = K_.V, W = K_.W, ell = K_.ell;
  put_raw(os, n);
  put_raw(os, U);
  put_raw(os, V);
  put_raw(os, W);
  put_raw(os, ell);
  const std::string name = engine_->name();
  const int32_t len = static_cast<int32_t>(name.size());
  put_raw(os, len);
  os.write(name.data(), len);
  ring_.save(os);
  engine_->save_state(os);
  if (!os) throw ConfigError("failed writing checkpoint " + path);
}

void Marcher::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read checkpoint " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw ConfigError(path + " is not a checkpoint file");
  int32_t version = 0, n = 0, U = 0, V = 0, W = 0, ell = 0, len = 0;
  get_raw(is, version);
  if (version != kCheckpointVersion) throw ConfigError("checkpoint: unsupported version");
  get_raw(is, n);
  get_raw(is, U);
  get_raw(is, V);
  get_raw(is, W);
  get_raw(is, ell);
  if (U != K_.U || V != K_.V || W != K_.W || ell != K_.ell)
    throw ConfigError("checkpoint was written for another grid");
  get_raw(is, len);
  if (len < 0 || len > 64) throw ConfigError("checkpoint: corrupt header");
  std::string name(len, '\0');
  is.read(name.data(), len);
  if (name != engine_->name())
    throw ConfigError("checkpoint was written by the " + name + " engine");
  ring_.load(is);
  engine_->load_state(is);
  n_ = n;
  engine_->restore(n_, ring_);
}

}  // namespace motjvie

#include "motjvie/hier.hpp"

#include <climits>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "motjvie/common.hpp"
#include "motjvie/toeplitz.hpp"

namespace motjvie {

bool Level::in_shell(int du, int dv, int dw) const {
  const int o[3] = {std::abs(du), std::abs(dv), std::abs(dw)};
  bool outer = true, in_inner = true;
  for (int i = 0; i < 3; ++i) {
    outer = outer && o[i] <= half[i];
    in_inner = in_inner && o[i] <= inner[i];
  }
  return outer && !in_inner;
}

int LevelPlan::owner(int du, int dv, int dw, int k) const {
  int found = -1;
  for (std::size_t l = 0; l < levels.size(); ++l)
    if (levels[l].in_shell(du, dv, dw) && levels[l].in_band(k)) {
      if (found >= 0) return -2;  // overlap, never expected
      found = static_cast<int>(l);
    }
  return found;
}

std::size_t LevelPlan::predicted_bytes(std::size_t M) const {
  std::size_t b = 0;
  for (const auto& l : levels) {
    const std::size_t ns = l.spectrum_bytes / sizeof(Complex);
    b += (kPairs + 4) * ns * sizeof(Complex) + static_cast<std::size_t>(l.e + l.block) * M * sizeof(double);
  }
  return b + static_cast<std::size_t>(horizon + 1) * 3 * M * sizeof(double);
}

std::string LevelPlan::dump(std::size_t M) const {
  std::ostringstream os;
  os << "levels " << levels.size() << " horizon " << horizon << "\n";
  os << "# level half_u half_v half_w lag_s lag_e block sizes(t,w,v,u) spectra_MB\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& v = levels[l];
    os << l << ' ' << v.half[0] << ' ' << v.half[1] << ' ' << v.half[2] << ' ' << v.s << ' '
       << v.e << ' ' << v.block << ' ';
    for (std::size_t i = 0; i < v.sizes.size(); ++i) os << (i ? "x" : "") << v.sizes[i];
    os << ' ' << kPairs * v.spectrum_bytes / 1e6 << "\n";
  }
  os << "predicted_memory_MB " << predicted_bytes(M) / 1e6 << "\n";
  return os.str();
}

LevelPlan plan_levels(const InteractionKernel& K) {
  const double h = c0 * K.dt;
  const std::array<double, 3> a{K.dx / h, K.dy / h, K.dz / h};
  const std::array<int, 3> cap{K.U - 1, K.V - 1, K.W - 1};

  // innermost box: every offset with a gap below 2 c dt along its axis
  std::vector<std::array<int, 3>> boxes;
  std::array<int, 3> b{};
  for (int i = 0; i < 3; ++i) {
    int n = 0;
    while (n < cap[i] && n * a[i] < 2.0 - 1e-9) ++n;  // gap of offset n+1 is n*a
    b[i] = n;
  }
  boxes.push_back(b);
  while (b != cap) {
    for (int i = 0; i < 3; ++i) b[i] = std::min(cap[i], std::max(1, 2 * b[i]));
    boxes.push_back(b);
  }

  LevelPlan plan;
  const int K_lev = static_cast<int>(boxes.size()) - 1;
  for (int idx = K_lev; idx >= 0; --idx) {
    Level l;
    l.half = boxes[idx];
    double dmax = 0;
    for (int i = 0; i < 3; ++i) dmax += std::pow((l.half[i] + 1) * a[i], 2);
    l.e = std::min(K.ell, static_cast<int>(std::floor(std::sqrt(dmax))) + 2);
    if (idx == 0) {
      l.inner = {-1, -1, -1};
      l.s = 1;
    } else {
      l.inner = boxes[idx - 1];
      double dmin = INFINITY;
      for (int i = 0; i < 3; ++i)
        if (l.half[i] > l.inner[i]) dmin = std::min(dmin, l.inner[i] * a[i]);
      l.s = std::max(1, static_cast<int>(std::floor(dmin + 1e-9)));
    }
    l.s = std::min(l.s, l.e);
    l.block = l.s;
    l.sizes = {smooth_size(l.e + l.block - 1), smooth_size(2 * K.W - 1), smooth_size(2 * K.V - 1),
               smooth_size(2 * K.U - 1)};
    l.spectrum_bytes = sizeof(Complex) * static_cast<std::size_t>(l.sizes[0]) * l.sizes[1] *
                       l.sizes[2] * (l.sizes[3] / 2 + 1);
    plan.horizon = std::max(plan.horizon, l.e);
    plan.levels.push_back(l);
  }
  return plan;
}

struct HierarchicalEngine::LevelData {
  std::unique_ptr<CirculantEmbedding> emb;
  std::vector<Complex> spectra;  // kPairs blocks
  std::vector<bool> nonzero;
  std::vector<double> x, y;
  std::vector<Complex> xhat, acc;
};

HierarchicalEngine::HierarchicalEngine(const InteractionKernel& K) : K_(K), plan_(plan_levels(K)) {
  const std::size_t M = K.M();
  static constexpr int comp[kPairs][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
  for (const Level& l : plan_.levels) {
    auto d = std::make_unique<LevelData>();
    const int rows_t = l.e, cols_t = l.block;
    d->emb = std::make_unique<CirculantEmbedding>(std::vector<int>{rows_t, K.W, K.V, K.U},
                                                  std::vector<int>{cols_t, K.W, K.V, K.U});
    const std::size_t ns = d->emb->spectrum_size();
    d->spectra.assign(kPairs * ns, Complex{});
    for (int p = 0; p < kPairs; ++p) {
      bool any = false;
      for (int oi = 0; oi < K.noff() && !any; ++oi) {
        const auto o = K.offset_of(oi);
        if (!l.in_shell(o[0], o[1], o[2])) continue;
        for (int k = l.s; k <= l.e && !any; ++k) any = K.lag_row(p, oi)[k] != 0.0;
      }
      d->nonzero.push_back(any);
      if (!any) continue;
      const int b = comp[p][0], a = comp[p][1];
      d->emb->spectrum(
          [&](const int* g) {
            const int k = g[0] + l.block;
            if (!l.in_band(k) || !l.in_shell(g[3], g[2], g[1])) return 0.0;
            return K.S(b, a, g[3], g[2], g[1], k);
          },
          d->spectra.data() + p * ns);
    }
    d->x.assign(static_cast<std::size_t>(cols_t) * M, 0.0);
    d->y.assign(static_cast<std::size_t>(rows_t) * M, 0.0);
    d->xhat.assign(3 * ns, Complex{});
    d->acc.assign(ns, Complex{});
    data_.push_back(std::move(d));
  }
  H_ = plan_.horizon + 1;
  pend_step_.assign(H_, INT_MIN);
  pend_.assign(static_cast<std::size_t>(H_) * 3 * M, 0.0);
}

HierarchicalEngine::~HierarchicalEngine() = default;

double* HierarchicalEngine::slot(int n) {
  const int s = ((n % H_) + H_) % H_;
  double* p = pend_.data() + static_cast<std::size_t>(s) * 3 * K_.M();
  if (pend_step_[s] != n) {
    std::fill(p, p + 3 * K_.M(), 0.0);
    pend_step_[s] = n;
  }
  return p;
}

const double* HierarchicalEngine::pending(int n) const {
  const int s = ((n % H_) + H_) % H_;
  return pend_step_[s] == n ? pend_.data() + static_cast<std::size_t>(s) * 3 * K_.M() : nullptr;
}

void HierarchicalEngine::history(int n, const JRing&, std::vector<double>& Q) {
  const double* p = pending(n);
  if (p)
    std::copy(p, p + Q.size(), Q.begin());
  else
    std::fill(Q.begin(), Q.end(), 0.0);
  // the slot is recycled for step n + H
  pend_step_[((n % H_) + H_) % H_] = INT_MIN;
}

void HierarchicalEngine::on_solved(int n, const JRing& ring) {
  for (std::size_t l = 0; l < plan_.levels.size(); ++l)
    if (n % plan_.levels[l].block == 0) fire_level(static_cast<int>(l), n, ring);
}

void HierarchicalEngine::fire_level(int level, int n0, const JRing& ring) {
  const Level& l = plan_.levels.at(level);
  if (n0 % l.block != 0)
    throw std::logic_error("hierarchical: level " + std::to_string(level) + " fired off cadence at step " +
                           std::to_string(n0));
  LevelData& d = *data_[level];
  const std::size_t M = K_.M();
  const std::size_t ns = d.emb->spectrum_size();
  bool any_source = false;
  for (int a = 0; a < 3; ++a) {
    for (int j = 0; j < l.block; ++j) {
      const double* J = ring.get(n0 - l.block + 1 + j);
      double* dst = d.x.data() + j * M;
      if (J) {
        std::copy(J + a * M, J + (a + 1) * M, dst);
        any_source = true;
      } else {
        std::fill(dst, dst + M, 0.0);
      }
    }
    d.emb->forward(d.x.data(), d.xhat.data() + a * ns);
  }
  if (!any_source) return;
  for (int b = 0; b < 3; ++b) {
    std::fill(d.acc.begin(), d.acc.end(), Complex{});
    bool any = false;
    for (int a = 0; a < 3; ++a) {
      const int p = pair_index(b, a);
      if (!d.nonzero[p]) continue;
      const Complex* kh = d.spectra.data() + p * ns;
      const Complex* xh = d.xhat.data() + a * ns;
      parallel_for(ns, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) d.acc[i] += kh[i] * xh[i];
      });
      any = true;
    }
    if (!any) continue;
    d.emb->inverse(d.acc.data(), d.y.data());
    for (int i = 0; i < l.e; ++i) {
      double* q = slot(n0 + 1 + i) + b * M;
      const double* y = d.y.data() + i * M;
      for (std::size_t m = 0; m < M; ++m) q[m] += y[m];
    }
  }
}

void HierarchicalEngine::save_state(std::ostream& os) const {
  const int32_t h = H_;
  os.write(reinterpret_cast<const char*>(&h), sizeof h);
  os.write(reinterpret_cast<const char*>(pend_step_.data()), sizeof(int) * pend_step_.size());
  os.write(reinterpret_cast<const char*>(pend_.data()), sizeof(double) * pend_.size());
}

void HierarchicalEngine::load_state(std::istream& is) {
  int32_t h = 0;
  is.read(reinterpret_cast<char*>(&h), sizeof h);
  if (!is || h != H_) throw ConfigError("checkpoint: pending horizon mismatch");
  is.read(reinterpret_cast<char*>(pend_step_.data()), sizeof(int) * pend_step_.size());
  is.read(reinterpret_cast<char*>(pend_.data()), sizeof(double) * pend_.size());
  if (!is) throw ConfigError("checkpoint: truncated pending buffer");
}

std::size_t HierarchicalEngine::memory_bytes() const {
  std::size_t b = pend_.size() * sizeof(double);
  for (const auto& d : data_)
    b += (d->spectra.size() + d->xhat.size() + d->acc.size()) * sizeof(Complex) +
         (d->x.size() + d->y.size()) * sizeof(double);
  return b;
}

std::unique_ptr<HistoryEngine> make_hierarchical_engine(const InteractionKernel& K) {
  return std::make_unique<HierarchicalEngine>(K);
}

}  // namespace motjvie

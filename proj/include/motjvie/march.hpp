#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "motjvie/kernel.hpp"

namespace motjvie {

// Last `capacity` current vectors, component-major [beta][m]. Steps n <= 0
// read as zero.
class JRing {
 public:
  JRing() = default;
  JRing(int capacity, int size);
  int capacity() const { return static_cast<int>(step_.size()); }
  int size() const { return size_; }
  // nullptr when step n is zero (n <= 0) or has left the ring
  const double* get(int n) const;
  double* put(int n);
  void clear();
  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  int size_ = 0;
  std::vector<int> step_;
  std::vector<double> data_;
};

// Evaluates Q_n = sum_{k=1..ell} S_k J_{n-k} for the marcher. history(n)
// is called once per step before J_n is solved, on_solved(n) right after.
class HistoryEngine {
 public:
  virtual ~HistoryEngine() = default;
  virtual std::string name() const = 0;
  virtual void history(int n, const JRing& ring, std::vector<double>& Q) = 0;
  virtual void on_solved(int /*n*/, const JRing& /*ring*/) {}
  // Rebuilds derived state after the ring was loaded from a checkpoint.
  virtual void restore(int /*n*/, const JRing& /*ring*/) {}
  virtual void save_state(std::ostream& /*os*/) const {}
  virtual void load_state(std::istream& /*is*/) {}
  virtual std::size_t memory_bytes() const { return 0; }
};

enum class EngineKind { direct, spatial, hierarchical };
EngineKind parse_engine(const std::string& s);
std::string engine_name(EngineKind e);

std::unique_ptr<HistoryEngine> make_direct_engine(const InteractionKernel& K);
std::unique_ptr<HistoryEngine> make_spatial_engine(const InteractionKernel& K);
std::unique_ptr<HistoryEngine> make_engine(EngineKind kind, const InteractionKernel& K);

// Lag-0 solve. Background voxels decouple (Z0 = ident0 there); the
// scatterer block, scaled by 1/C row-wise, is symmetric and factorized once.
class Z0Solver {
 public:
  struct Options {
    int max_direct = 8000;  // larger scatterer blocks use conjugate gradients
    double cg_tolerance = 1e-12;
  };
  Z0Solver(const InteractionKernel& K, const Options& opt);
  Z0Solver(const InteractionKernel& K) : Z0Solver(K, Options{}) {}
  ~Z0Solver();
  void solve(const std::vector<double>& rhs, std::vector<double>& J) const;
  // ||Z0 J - rhs|| / ||rhs||, 0 when rhs is zero
  double residual(const std::vector<double>& J, const std::vector<double>& rhs) const;
  bool direct() const { return direct_; }
  int scatterer_unknowns() const { return static_cast<int>(scat_.size()); }
  std::size_t nonzeros() const;
  // Full Z0 in component-major ordering, for tests.
  Eigen::SparseMatrix<double> matrix() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  const InteractionKernel& K_;
  bool direct_ = true;
  std::vector<int> scat_;  // unknown indices with C > 0
};

struct MarchOptions {
  EngineKind engine = EngineKind::spatial;
  Z0Solver::Options z0;
  double residual_tolerance = 1e-9;
};

class Marcher {
 public:
  Marcher(const InteractionKernel& K, const MarchOptions& opt = {});
  ~Marcher();

  // Solves the next step for excitation E (length 3M) and returns J_n.
  const std::vector<double>& step(const std::vector<double>& E);
  int steps_done() const { return n_; }
  const JRing& ring() const { return ring_; }
  HistoryEngine& engine() { return *engine_; }
  const Z0Solver& z0() const { return *z0_; }
  // seconds spent in history evaluation, accumulated
  double history_seconds() const { return history_seconds_; }
  // Pretends steps -capacity+1..0 held the given currents. Used by bench.
  void prefill(const std::vector<std::vector<double>>& past);

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  const InteractionKernel& K_;
  MarchOptions opt_;
  std::unique_ptr<HistoryEngine> engine_;
  std::unique_ptr<Z0Solver> z0_;
  JRing ring_;
  int n_ = 0;
  std::vector<double> Q_, rhs_, J_;
  double history_seconds_ = 0;
};

}  // namespace motjvie

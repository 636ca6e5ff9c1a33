#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "motjvie/kernel.hpp"
#include "motjvie/march.hpp"

namespace motjvie {

// One shell of the nested offset boxes. Level 0 is the full grid box, the
// last level is the innermost box holding every offset reached at lag 1.
struct Level {
  std::array<int, 3> half{};   // box half-widths (U_k, V_k, W_k)
  std::array<int, 3> inner{};  // half-widths of the next finer box, -1 for the innermost
  int s = 1, e = 1;            // lag band
  int block = 1;               // source columns per firing, also the cadence
  std::vector<int> sizes;      // transform lengths {t, w, v, u}
  std::size_t spectrum_bytes = 0;

  bool in_shell(int du, int dv, int dw) const;
  bool in_band(int k) const { return k >= s && k <= e; }
};

struct LevelPlan {
  std::vector<Level> levels;
  int horizon = 0;  // largest e over the levels
  // which level owns the (offset, lag) cell, -1 if none
  int owner(int du, int dv, int dw, int k) const;
  std::size_t predicted_bytes(std::size_t M) const;
  std::string dump(std::size_t M) const;
};

LevelPlan plan_levels(const InteractionKernel& K);

class HierarchicalEngine : public HistoryEngine {
 public:
  explicit HierarchicalEngine(const InteractionKernel& K);
  ~HierarchicalEngine() override;
  std::string name() const override { return "hierarchical"; }
  void history(int n, const JRing& ring, std::vector<double>& Q) override;
  void on_solved(int n, const JRing& ring) override;
  void save_state(std::ostream& os) const override;
  void load_state(std::istream& is) override;
  std::size_t memory_bytes() const override;

  const LevelPlan& plan() const { return plan_; }
  // Adds the level's band for sources J_{n0-b+1..n0} into pending slots
  // n0+1..n0+e. Throws std::logic_error when n0 is off the level's cadence.
  void fire_level(int level, int n0, const JRing& ring);
  // Accumulated contributions for future step n, nullptr if untouched.
  const double* pending(int n) const;

 private:
  struct LevelData;
  const InteractionKernel& K_;
  LevelPlan plan_;
  std::vector<std::unique_ptr<LevelData>> data_;
  int H_ = 0;
  std::vector<int> pend_step_;
  std::vector<double> pend_;
  double* slot(int n);
};

std::unique_ptr<HistoryEngine> make_hierarchical_engine(const InteractionKernel& K);

}  // namespace motjvie

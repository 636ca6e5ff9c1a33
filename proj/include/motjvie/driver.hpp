#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "motjvie/config.hpp"
#include "motjvie/hier.hpp"
#include "motjvie/post.hpp"
#include "motjvie/stability.hpp"

namespace motjvie {

// Kernel for the config: assembled or loaded from the cache, then
// truncated and regularized as configured.
InteractionKernel prepare_kernel(const RunConfig& c, const VoxelGrid& g, std::ostream* log = nullptr);

// Per-step alternating growth in a scalar monitor p_n = <w, J_n>.
struct GrowthReport {
  double sign_flip_fraction = 0;  // over the trailing window
  double growth_per_step = 1;     // fitted rate of log |p_n|
  bool alternating_growth = false;
};
GrowthReport analyze_growth(const std::vector<double>& monitor, double window_fraction = 0.25);

struct RunOutput {
  TimeSeries raw, spline;
  std::vector<double> max_abs;  // max |J_n| per step
  std::vector<double> monitor;  // fixed projection of J_n
  std::vector<double> step_seconds;
  double assemble_seconds = 0;
  double history_seconds = 0;
  int ell = 0;
  int first_step = 1;
  std::size_t engine_bytes = 0;
  double kernel_error = 0;
  double delta = 0;
  GrowthReport growth;
  // max |J| over the last 10% of steps and over the first half
  double late_max = 0, early_max = 0;
  std::string summary_json;
};

RunOutput run(const RunConfig& c, std::ostream& log);

struct BenchRow {
  int n = 0;
  std::size_t M = 0;
  int steps = 0;
  double history_seconds_per_step = 0;
  double assemble_seconds = 0;
  std::size_t engine_bytes = 0;
};

struct BenchResult {
  EngineKind engine = EngineKind::spatial;
  std::vector<BenchRow> rows;
  bool fitted = false;
  double slope = 0;  // log-log slope of time against the complexity model
  std::string text() const;
};

// Expected per-step history cost shape: M^2, M^(4/3) log M or M log^2 M.
double complexity_model(EngineKind e, double M);
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Times `steps` marching steps per cube size after filling the history with
// random currents. Voxel size and time step are taken from the config.
BenchResult bench(const RunConfig& c, const std::vector<int>& sizes, EngineKind engine, int steps,
                  std::ostream& log);

PdsaReport run_pdsa(const RunConfig& c, const std::vector<int>& n_list, PdsaMethod m, std::ostream& log);

Spectrum run_spectrum(const RunConfig& c, const std::string& series_path, const std::string& out_path);

std::string plan_dump(const RunConfig& c);

}  // namespace motjvie

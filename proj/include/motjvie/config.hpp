#pragma once

#include <string>
#include <vector>

#include "motjvie/grid.hpp"
#include "motjvie/kernel.hpp"
#include "motjvie/march.hpp"

namespace motjvie {

struct RunConfig {
  ShapeSpec shape;
  int U = 8, V = 8, W = 8;
  Vec3 box{0.08, 0.08, 0.08};
  Vec3 origin{0, 0, 0};
  double dt = 0;  // seconds
  int steps = 100;

  EngineKind engine = EngineKind::spatial;
  double kernel_tolerance = 1e-7;
  std::string kernel_cache;
  int z0_max_direct = 8000;

  PlaneWaveSpec wave;
  int gauss_order = 2;

  int fir_order = 0;  // 0 = no regularization
  bool delta_auto = false;
  double delta = 0;
  bool fir4_plus_last_tap = false;
  double truncation = 0;  // 0 = none

  std::vector<Vec3> probes;

  std::string timeseries_path;
  std::string summary_path;
  std::string checkpoint_path;
  int checkpoint_every = 0;
  bool resume = false;

  // spectrum section
  double f_min = 0, f_max = 1e9;
  int f_count = 201;
  double taper_fraction = 0.2;
};

// Time quantity with optional unit suffix: "0.01 lm", "3.3e-11 s", "3.3e-11".
double parse_time(const std::string& text);

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_string(const std::string& text);

VoxelGrid make_grid(const RunConfig& c);

}  // namespace motjvie

#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "motjvie/common.hpp"
#include "motjvie/grid.hpp"
#include "motjvie/kernel.hpp"

namespace testing {

using namespace motjvie;

// Box grid of U x V x W voxels with edge h, filled with eps.
inline VoxelGrid box_grid(int U, int V, int W, double eps, double h = 0.01) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::cube;
  s.eps = eps;
  s.center = {0.5 * U * h, 0.5 * V * h, 0.5 * W * h};
  s.size = 10.0;
  return build_grid(s, U, V, W, {U * h, V * h, W * h});
}

inline InteractionKernel box_kernel(const VoxelGrid& g, double dt) {
  InteractionKernel K = assemble_kernel(g, dt);
  attach_grid(K, g);
  return K;
}

struct RefEntry {
  int beta, alpha, du, dv, dw, k;
  double value;
};

struct RefTable {
  int U = 0, V = 0, W = 0, ell = 0;
  double a[3] = {0, 0, 0};  // voxel edge over c dt
  std::vector<RefEntry> rows;
};

inline RefTable read_ref(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("missing reference table " + path);
  RefTable t;
  std::string line;
  bool dims = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!dims) {
      ls >> t.U >> t.V >> t.W >> t.a[0] >> t.a[1] >> t.a[2] >> t.ell;
      dims = true;
      continue;
    }
    RefEntry e{};
    ls >> e.beta >> e.alpha >> e.du >> e.dv >> e.dw >> e.k >> e.value;
    if (ls) t.rows.push_back(e);
  }
  return t;
}

inline double max_rel_diff(const std::vector<double>& x, const std::vector<double>& ref) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - ref[i]) * (x[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  if (den == 0) return num == 0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

}  // namespace testing

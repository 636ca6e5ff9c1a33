#pragma once

#include <array>
#include <utility>
#include <vector>

namespace motjvie {

using Vec3 = std::array<double, 3>;

struct ShapeSpec {
  enum class Kind { cube, sphere, layered_slab, explicit_map };
  Kind kind = Kind::cube;
  Vec3 center{0.1, 0.1, 0.1};
  double size = 0.2;  // cube edge or sphere diameter, meters
  double eps = 1.0;
  // layered slab: layer i spans [bounds[i], bounds[i+1]) along slab_axis
  int slab_axis = 2;
  std::vector<double> slab_bounds;
  std::vector<double> slab_eps;
  // explicit map: U*V*W values in linear index order
  std::vector<double> values;
};

struct VoxelGrid {
  int U = 0, V = 0, W = 0;
  double dx = 0, dy = 0, dz = 0;
  Vec3 origin{0, 0, 0};
  std::vector<double> eps_r;

  int M() const { return U * V * W; }
  double volume() const { return dx * dy * dz; }
  // zero-based flat index, u fastest
  int flat(int u, int v, int w) const { return (w * V + v) * U + u; }
  std::array<int, 3> unflat(int i) const { return {i % U, (i / U) % V, i / (U * V)}; }
  Vec3 center(int i) const;
  double contrast(int i) const { return (eps_r[i] - 1.0) / eps_r[i]; }
};

VoxelGrid build_grid(const ShapeSpec& shape, int U, int V, int W, const Vec3& box,
                     const Vec3& origin = {0, 0, 0});

// One-based index arithmetic: m = (w-1)UV + (v-1)U + u.
int linear_index(int u, int v, int w, const VoxelGrid& g);
std::array<int, 3> inverse_index(int m, const VoxelGrid& g);

// Exact min/max point distance between two voxels whose centers differ by
// the integer offset times the voxel edges.
std::pair<double, double> pair_distance_bounds(const std::array<int, 3>& offset,
                                               const VoxelGrid& g);
std::pair<double, double> pair_distance_bounds(const std::array<int, 3>& offset,
                                               const Vec3& edges);

}  // namespace motjvie

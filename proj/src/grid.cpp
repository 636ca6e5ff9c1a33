#include "motjvie/grid.hpp"

#include <cmath>
#include <string>

#include "motjvie/common.hpp"

namespace motjvie {

Vec3 VoxelGrid::center(int i) const {
  const auto [u, v, w] = unflat(i);
  return {origin[0] + (u + 0.5) * dx, origin[1] + (v + 0.5) * dy, origin[2] + (w + 0.5) * dz};
}

namespace {

double sample(const ShapeSpec& s, const Vec3& r) {
  switch (s.kind) {
    case ShapeSpec::Kind::cube: {
      const double h = 0.5 * s.size;
      for (int a = 0; a < 3; ++a)
        if (std::abs(r[a] - s.center[a]) > h) return 1.0;
      return s.eps;
    }
    case ShapeSpec::Kind::sphere: {
      double d2 = 0;
      for (int a = 0; a < 3; ++a) d2 += (r[a] - s.center[a]) * (r[a] - s.center[a]);
      return d2 <= 0.25 * s.size * s.size ? s.eps : 1.0;
    }
    case ShapeSpec::Kind::layered_slab: {
      const double x = r[s.slab_axis];
      for (std::size_t i = 0; i + 1 < s.slab_bounds.size(); ++i)
        if (x >= s.slab_bounds[i] && x < s.slab_bounds[i + 1]) return s.slab_eps[i];
      return 1.0;
    }
    case ShapeSpec::Kind::explicit_map:
      break;
  }
  return 1.0;
}

}  // namespace

VoxelGrid build_grid(const ShapeSpec& shape, int U, int V, int W, const Vec3& box,
                     const Vec3& origin) {
  if (U < 1 || V < 1 || W < 1) throw ConfigError("grid counts must be positive");
  if (!(box[0] > 0 && box[1] > 0 && box[2] > 0)) throw ConfigError("box extents must be positive");
  VoxelGrid g;
  g.U = U;
  g.V = V;
  g.W = W;
  g.dx = box[0] / U;
  g.dy = box[1] / V;
  g.dz = box[2] / W;
  g.origin = origin;
  const int M = g.M();
  g.eps_r.resize(M);
  if (shape.kind == ShapeSpec::Kind::explicit_map) {
    if (static_cast<int>(shape.values.size()) != M)
      throw ConfigError("explicit map needs " + std::to_string(M) + " values, got " +
                        std::to_string(shape.values.size()));
    g.eps_r = shape.values;
  } else {
    if (shape.kind == ShapeSpec::Kind::layered_slab) {
      if (shape.slab_axis < 0 || shape.slab_axis > 2) throw ConfigError("slab axis must be 0, 1 or 2");
      if (shape.slab_bounds.size() != shape.slab_eps.size() + 1)
        throw ConfigError("slab needs one more bound than layer permittivities");
    }
    for (int i = 0; i < M; ++i) g.eps_r[i] = sample(shape, g.center(i));
  }
  for (int i = 0; i < M; ++i)
    if (!(g.eps_r[i] >= 1.0)) throw ConfigError("relative permittivity must be >= 1");
  return g;
}

int linear_index(int u, int v, int w, const VoxelGrid& g) {
  if (u < 1 || u > g.U || v < 1 || v > g.V || w < 1 || w > g.W)
    throw IndexError("voxel index out of range");
  return (w - 1) * g.U * g.V + (v - 1) * g.U + u;
}

std::array<int, 3> inverse_index(int m, const VoxelGrid& g) {
  if (m < 1 || m > g.M()) throw IndexError("linear index out of range");
  const int i = m - 1;
  return {i % g.U + 1, (i / g.U) % g.V + 1, i / (g.U * g.V) + 1};
}

std::pair<double, double> pair_distance_bounds(const std::array<int, 3>& offset, const Vec3& edges) {
  double lo = 0, hi = 0;
  for (int a = 0; a < 3; ++a) {
    const int n = std::abs(offset[a]);
    const double gap = n > 0 ? (n - 1) * edges[a] : 0.0;
    const double span = (n + 1) * edges[a];
    lo += gap * gap;
    hi += span * span;
  }
  return {std::sqrt(lo), std::sqrt(hi)};
}

std::pair<double, double> pair_distance_bounds(const std::array<int, 3>& offset, const VoxelGrid& g) {
  return pair_distance_bounds(offset, Vec3{g.dx, g.dy, g.dz});
}

}  // namespace motjvie

#include "doctest.h"
#include "helpers.hpp"

using namespace motjvie;

TEST_CASE("linear index round trip is one-based with u fastest") {
  const auto g = testing::box_grid(4, 3, 2, 2.0);
  CHECK(linear_index(1, 1, 1, g) == 1);
  CHECK(linear_index(2, 1, 1, g) == 2);
  CHECK(linear_index(1, 2, 1, g) == 5);
  CHECK(linear_index(1, 1, 2, g) == 13);
  for (int m = 1; m <= g.M(); ++m) {
    const auto [u, v, w] = inverse_index(m, g);
    CHECK(linear_index(u, v, w, g) == m);
  }
  CHECK_THROWS_AS(linear_index(0, 1, 1, g), IndexError);
  CHECK_THROWS_AS(linear_index(5, 1, 1, g), IndexError);
  CHECK_THROWS_AS(inverse_index(25, g), IndexError);
}

TEST_CASE("voxel centres sit at half-cell positions") {
  const auto g = testing::box_grid(4, 3, 2, 2.0);
  const Vec3 c = g.center(g.flat(1, 2, 1));
  CHECK(c[0] == doctest::Approx(0.015));
  CHECK(c[1] == doctest::Approx(0.025));
  CHECK(c[2] == doctest::Approx(0.015));
}

TEST_CASE("shapes") {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::sphere;
  s.center = {0.05, 0.05, 0.05};
  s.size = 0.06;
  s.eps = 4.0;
  const auto g = build_grid(s, 10, 10, 10, {0.1, 0.1, 0.1});
  int inside = 0;
  for (double e : g.eps_r) inside += e > 1.0;
  // 4/3 pi r^3 / h^3 = 113.1 voxels, staircased
  CHECK(inside > 90);
  CHECK(inside < 140);
  CHECK(g.eps_r[g.flat(5, 5, 5)] == 4.0);
  CHECK(g.eps_r[g.flat(0, 0, 0)] == 1.0);

  ShapeSpec slab;
  slab.kind = ShapeSpec::Kind::layered_slab;
  slab.slab_axis = 2;
  slab.slab_bounds = {0.0, 0.02, 0.04};
  slab.slab_eps = {2.0, 5.0};
  const auto gs = build_grid(slab, 2, 2, 4, {0.02, 0.02, 0.04});
  CHECK(gs.eps_r[gs.flat(0, 0, 0)] == 2.0);
  CHECK(gs.eps_r[gs.flat(0, 0, 3)] == 5.0);

  ShapeSpec map;
  map.kind = ShapeSpec::Kind::explicit_map;
  map.values = {1, 2, 3, 4, 5, 6, 7, 8};
  const auto gm = build_grid(map, 2, 2, 2, {0.02, 0.02, 0.02});
  CHECK(gm.eps_r[gm.flat(1, 0, 1)] == 6.0);
  map.values.pop_back();
  CHECK_THROWS_AS(build_grid(map, 2, 2, 2, {0.02, 0.02, 0.02}), ConfigError);
  map.values = {1, 1, 1, 1, 1, 1, 1, 0.5};
  CHECK_THROWS_AS(build_grid(map, 2, 2, 2, {0.02, 0.02, 0.02}), ConfigError);
}

TEST_CASE("pair distance bounds") {
  const Vec3 h{1.0, 1.0, 1.0};
  const auto self = pair_distance_bounds({0, 0, 0}, h);
  CHECK(self.first == 0.0);
  CHECK(self.second == doctest::Approx(std::sqrt(3.0)));
  const auto face = pair_distance_bounds({1, 0, 0}, h);
  CHECK(face.first == 0.0);
  const auto far = pair_distance_bounds({3, 0, 0}, h);
  CHECK(far.first == doctest::Approx(2.0));
  CHECK(far.second == doctest::Approx(std::sqrt(16.0 + 1.0 + 1.0)));
  const auto diag = pair_distance_bounds({2, -2, 2}, h);
  CHECK(diag.first == doctest::Approx(std::sqrt(3.0)));
}

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"

using namespace motjvie;

namespace {

// Grid matching a reference table: c dt = h, edges a_i h.
VoxelGrid table_grid(const testing::RefTable& t, double h) {
  ShapeSpec s;
  s.kind = ShapeSpec::Kind::cube;
  s.eps = 2.0;
  s.size = 10.0;
  s.center = {0, 0, 0};
  return build_grid(s, t.U, t.V, t.W, {t.U * t.a[0] * h, t.V * t.a[1] * h, t.W * t.a[2] * h});
}

double worst_against_table(const std::string& name, double h) {
  const auto t = testing::read_ref(std::string(MOTJVIE_TEST_DATA) + "/" + name);
  const auto g = table_grid(t, h);
  QuadratureSpec q;
  q.tolerance = 1e-10;
  const auto K = assemble_kernel(g, h / c0, q);
  REQUIRE(K.ell == t.ell);
  REQUIRE(t.rows.size() > 0);
  double worst = 0;
  for (const auto& r : t.rows) worst = std::max(worst, std::abs(K.S(r.beta, r.alpha, r.du, r.dv, r.dw, r.k) - r.value));
  return worst;
}

}  // namespace

TEST_CASE("kernel matches the frozen brute-force tables") {
  CHECK(worst_against_table("kernel_ref_411.txt", 0.01) < 1e-10);
  CHECK(worst_against_table("kernel_ref_222.txt", 0.009) < 1e-10);
  CHECK(worst_against_table("kernel_ref_333.txt", 0.01) < 1e-10);
}

TEST_CASE("kernel is even in the offset and symmetric in the component pair") {
  const auto g = testing::box_grid(3, 2, 2, 3.0, 0.01);
  const auto K = testing::box_kernel(g, 0.012 / c0);
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a)
      for (int oi = 0; oi < K.noff(); ++oi) {
        const auto o = K.offset_of(oi);
        for (int k = 0; k <= K.ell; ++k) {
          CHECK(K.S(b, a, o[0], o[1], o[2], k) == K.S(a, b, o[0], o[1], o[2], k));
          CHECK(std::abs(K.S(b, a, o[0], o[1], o[2], k) - K.S(b, a, -o[0], -o[1], -o[2], k)) < 1e-15);
        }
      }
}

TEST_CASE("lag count follows the grid diagonal") {
  const auto g = testing::box_grid(4, 3, 2, 2.0, 0.01);
  CHECK(lag_count(g, 0.01 / c0) == static_cast<int>(std::floor(std::sqrt(16.0 + 9.0 + 4.0))) + 2);
  CHECK_THROWS_AS(lag_count(g, 0.0), ConfigError);
}

TEST_CASE("Z element combines the Gram identity and the contrast") {
  const auto g = testing::box_grid(2, 2, 1, 4.0, 0.01);
  const auto K = testing::box_kernel(g, 0.01 / c0);
  const double C = 0.75;
  CHECK(K.Z(0, 0, 1, 1, 0) == doctest::Approx(0.5 - C * K.S(0, 0, 0, 0, 0, 0)));
  CHECK(K.Z(0, 0, 1, 1, 1) == doctest::Approx(0.5 - C * K.S(0, 0, 0, 0, 0, 1)));
  CHECK(K.Z(0, 1, 0, 3, 2) == doctest::Approx(-C * K.S(0, 1, -1, -1, 0, 2)));
  CHECK(K.Z(0, 0, 0, 0, K.ell + 1) == 0.0);
}

TEST_CASE("quadrature tolerance that cannot be met is reported") {
  const auto g = testing::box_grid(2, 1, 1, 2.0, 0.01);
  QuadratureSpec q;
  q.tolerance = 1e-300;
  q.max_level = 2;
  CHECK_THROWS_AS(assemble_kernel(g, 0.01 / c0, q), NumericalError);
  q.tolerance = 0;
  CHECK_THROWS_AS(assemble_kernel(g, 0.01 / c0, q), ConfigError);
}

TEST_CASE("kernel cache round trip") {
  const auto g = testing::box_grid(3, 2, 2, 2.0, 0.01);
  const double dt = 0.01 / c0;
  const auto path = (std::filesystem::temp_directory_path() / "motjvie_kernel_cache_test.bin").string();
  std::filesystem::remove(path);
  const auto K = load_or_assemble(path, g, dt);
  REQUIRE(std::filesystem::exists(path));
  InteractionKernel L;
  REQUIRE(load_kernel(path, g, dt, K.tolerance, L));
  CHECK(L.values == K.values);
  CHECK(L.ell == K.ell);
  CHECK_FALSE(load_kernel(path, g, 2 * dt, K.tolerance, L));
  const auto g2 = testing::box_grid(2, 2, 3, 2.0, 0.01);
  CHECK_FALSE(load_kernel(path, g2, dt, K.tolerance, L));
  std::filesystem::remove(path);
}

TEST_CASE("plane wave excitation") {
  PlaneWaveSpec w;
  CHECK_NOTHROW(validate(w));
  // unit-area pulse: the spectrum at DC equals E0
  CHECK(incident_spectrum_magnitude(w, 0.0) == doctest::Approx(w.E0));
  // the pulse peaks at t0 + r.k in lightmeters
  const Vec3 r{0, 0, -0.5};
  const double peak = (w.t0 + 0.5) / c0;
  CHECK(incident_field(w, r, peak) == doctest::Approx(4.0 * w.E0 / (w.sigma * std::sqrt(pi))));
  CHECK(incident_field(w, r, peak + 0.01 / c0) < incident_field(w, r, peak));

  PlaneWaveSpec bad = w;
  bad.p_hat = {0, 0, 1};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = w;
  bad.k_hat = {0, 0, -2};
  CHECK_THROWS_AS(validate(bad), ConfigError);

  const auto g = testing::box_grid(2, 2, 2, 3.0, 0.01);
  CHECK_THROWS_AS(excitation_vector(g, w, 0, 0.01 / c0), ConfigError);
  const auto E = excitation_vector(g, w, 342, 0.01 / c0);
  REQUIRE(E.size() == 24u);
  for (int m = 0; m < 8; ++m) {
    CHECK(E[m] > 0);
    CHECK(E[8 + m] == 0.0);
    CHECK(E[16 + m] == 0.0);
  }
  // background voxels carry no excitation
  const auto g1 = testing::box_grid(2, 2, 2, 1.0, 0.01);
  for (double e : excitation_vector(g1, w, 342, 0.01 / c0)) CHECK(e == 0.0);
}

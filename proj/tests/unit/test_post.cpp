#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "motjvie/post.hpp"

using namespace motjvie;

TEST_CASE("probes must sit on voxel centres") {
  const auto g = testing::box_grid(4, 4, 4, 2.0);
  CHECK(probe_voxels(g, {{0.015, 0.025, 0.035}})[0] == g.flat(1, 2, 3));
  try {
    probe_voxels(g, {{0.016, 0.025, 0.035}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nearest centre is (0.015, 0.025, 0.035)") != std::string::npos);
  }
}

TEST_CASE("spline samples average neighbouring coefficients") {
  const auto g = testing::box_grid(2, 1, 1, 2.0);
  Prober p(g, {{0.005, 0.005, 0.005}}, 1e-12);
  p.record({1, 0, 2, 0, 3, 0});
  p.record({5, 0, 6, 0, 7, 0});
  const auto s = p.spline();
  CHECK(s.samples[0][0] == Vec3{0.5, 1.0, 1.5});
  CHECK(s.samples[0][1] == Vec3{3.0, 4.0, 5.0});
  CHECK(p.raw().samples[0][1] == Vec3{5, 6, 7});
}

TEST_CASE("taper window") {
  const auto w = taper_window(100, 0.2);
  for (int i = 0; i < 80; ++i) CHECK(w[i] == 1.0);
  for (int i = 80; i < 99; ++i) CHECK(w[i] < w[i - 1] + 1e-15);
  CHECK(w[99] == 0.0);
  CHECK_THROWS_AS(taper_window(10, 0.0), ConfigError);
  CHECK_THROWS_AS(taper_window(10, 1.0), ConfigError);
}

TEST_CASE("incident pulse through the spectrum pipeline gives unit response") {
  PlaneWaveSpec w;
  const double dt = 0.01 / c0, eps = 5.0;
  TimeSeries s;
  s.dt = dt;
  s.points = {{0, 0, 0}};
  s.samples.resize(1);
  for (int n = 1; n <= 2000; ++n) {
    const double e = eps0 * (eps - 1.0) * incident_field(w, {0, 0, 0}, n * dt);
    s.samples[0].push_back({e, 0.5 * e, 0});
  }
  std::vector<double> f;
  for (int i = 0; i <= 100; ++i) f.push_back(2e7 * i);
  const auto h = frequency_response(taper(s, 0.2), w, {eps}, f);
  REQUIRE(!h.freqs.empty());
  for (std::size_t i = 0; i < h.freqs.size(); ++i) {
    CHECK(h.mag[0][i][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(h.mag[0][i][1] == doctest::Approx(0.5).epsilon(1e-6));
  }
  const auto err = l2_relative_error(h, h);
  for (double e : err) CHECK(e == 0.0);
  CHECK_THROWS_AS(frequency_response(s, w, {1.0}, f), ConfigError);
}

TEST_CASE("time series and spectrum files round trip") {
  TimeSeries s;
  s.dt = 3.3356409519815204e-11;
  s.start_step = 4;
  s.points = {{0.005, 0.015, 0.025}, {0.1, 0.2, 0.3}};
  s.samples = {{{1e-20, -2.5, 3.0}, {0.1, 0.2, 0.3}}, {{7, 8, 9}, {-1e300, 0, 1}}};
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "motjvie_ts_test.txt").string();
  write_timeseries(path, s);
  const auto r = read_timeseries(path);
  CHECK(r.dt == s.dt);
  CHECK(r.start_step == 4);
  CHECK(r.points == s.points);
  CHECK(r.samples == s.samples);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_timeseries(path), ConfigError);
}

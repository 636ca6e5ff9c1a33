#include "doctest.h"
#include "motjvie/common.hpp"
#include "motjvie/config.hpp"

using namespace motjvie;

TEST_CASE("time units") {
  CHECK(parse_time("0.01 lm") == doctest::Approx(0.01 / c0));
  CHECK(parse_time("3.3e-11 s") == doctest::Approx(3.3e-11));
  CHECK(parse_time("3.3e-11") == doctest::Approx(3.3e-11));
  CHECK_THROWS_AS(parse_time("3 ns"), ConfigError);
  CHECK_THROWS_AS(parse_time("fast"), ConfigError);
}

TEST_CASE("full configuration") {
  const auto c = parse_config_string(R"(
[grid]
n = 6
box = 0.06
shape = sphere
eps = 4
[time]
dt = 0.01 lm
steps = 50
[solver]
engine = hier
[excitation]
sigma = 1.5
t0 = 2
k_hat = 1 0 0
p_hat = 0 1 0
[regularization]
delta = auto
[probes]
points = 0.025 0.025 0.025; 0.035,0.035,0.035
[output]
summary = s.json
)");
  CHECK(c.U == 6);
  CHECK(c.W == 6);
  CHECK(c.box[2] == 0.06);
  CHECK(c.shape.kind == ShapeSpec::Kind::sphere);
  CHECK(c.shape.center[0] == doctest::Approx(0.03));
  CHECK(c.dt == doctest::Approx(0.01 / c0));
  CHECK(c.engine == EngineKind::hierarchical);
  CHECK(c.wave.sigma == doctest::Approx(1.5));
  CHECK(c.wave.t0 == doctest::Approx(2.0));
  CHECK(c.fir_order == 3);
  CHECK(c.delta_auto);
  REQUIRE(c.probes.size() == 2);
  CHECK(c.probes[1][2] == 0.035);
  CHECK(make_grid(c).M() == 216);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(parse_config_string("[grid]\nn = 4\n"), ConfigError);  // no dt
  CHECK_THROWS_AS(parse_config_string("[time]\ndt = 1e-11\n[grid]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("[time]\ndt = 1e-11\n[grid]\nn = four\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("[time]\ndt = 1e-11\n[solver]\nengine = magic\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("[time]\ndt = 1e-11\n[excitation]\np_hat = 0 0 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("[time]\ndt = 1e-11\n[regularization]\norder = 7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("[time\ndt = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/run.ini"), ConfigError);
}

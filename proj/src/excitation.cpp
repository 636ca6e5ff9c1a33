#include <cmath>

#include "motjvie/common.hpp"
#include "motjvie/kernel.hpp"
#include "motjvie/quadrature.hpp"

namespace motjvie {

void validate(const PlaneWaveSpec& w) {
  auto norm = [](const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); };
  if (std::abs(norm(w.k_hat) - 1.0) > 1e-9 || std::abs(norm(w.p_hat) - 1.0) > 1e-9)
    throw ConfigError("propagation and polarization directions must be unit vectors");
  const double dot = w.k_hat[0] * w.p_hat[0] + w.k_hat[1] * w.p_hat[1] + w.k_hat[2] * w.p_hat[2];
  if (std::abs(dot) > 1e-9) throw ConfigError("polarization must be orthogonal to propagation");
  if (!(w.sigma > 0)) throw ConfigError("pulse width must be positive");
}

double incident_field(const PlaneWaveSpec& w, const Vec3& r, double t) {
  const double t_lm = t * c0;
  const double rk = r[0] * w.k_hat[0] + r[1] * w.k_hat[1] + r[2] * w.k_hat[2];
  const double arg = 4.0 / w.sigma * ((t_lm - w.t0) - rk);
  return 4.0 * w.E0 / (w.sigma * std::sqrt(pi)) * std::exp(-arg * arg);
}

std::vector<double> excitation_vector(const VoxelGrid& g, const PlaneWaveSpec& w, int n, double dt,
                                      int gauss_order) {
  if (n < 1) throw ConfigError("step index starts at 1");
  const int M = g.M();
  std::vector<double> E(3 * static_cast<std::size_t>(M), 0.0);
  const auto& rule = quad::gauss_legendre(gauss_order);
  const double t = n * dt;
  for (int m = 0; m < M; ++m) {
    const double c = g.contrast(m);
    if (c == 0.0) continue;
    const Vec3 rc = g.center(m);
    double avg = 0.0;
    for (int i = 0; i < gauss_order; ++i)
      for (int j = 0; j < gauss_order; ++j)
        for (int k = 0; k < gauss_order; ++k) {
          const Vec3 r{rc[0] + 0.5 * g.dx * rule.x[i], rc[1] + 0.5 * g.dy * rule.x[j],
                       rc[2] + 0.5 * g.dz * rule.x[k]};
          avg += rule.w[i] * rule.w[j] * rule.w[k] * incident_field(w, r, t);
        }
    avg *= 0.125 * c * eps0;
    for (int b = 0; b < 3; ++b) E[static_cast<std::size_t>(b) * M + m] = avg * w.p_hat[b];
  }
  return E;
}

double incident_spectrum_magnitude(const PlaneWaveSpec& w, double f_hz) {
  const double sigma_s = w.sigma / c0;
  const double x = pi * f_hz * sigma_s / 4.0;
  return w.E0 * std::exp(-x * x);
}

}  // namespace motjvie

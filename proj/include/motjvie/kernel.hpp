#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "motjvie/grid.hpp"

namespace motjvie {

// Quadratic B-spline on [0, 3]: x^2/2, (-2x^2+6x-3)/2, (3-x)^2/2.
inline double b2(double x) {
  if (x <= 0.0 || x >= 3.0) return 0.0;
  if (x < 1.0) return 0.5 * x * x;
  if (x < 2.0) return 0.5 * (-2.0 * x * x + 6.0 * x - 3.0);
  return 0.5 * (3.0 - x) * (3.0 - x);
}

// Nodal values of the temporal basis at integer lags.
inline double gram(int k) { return (k == 0 || k == 1) ? 0.5 : 0.0; }

struct QuadratureSpec {
  double tolerance = 1e-7;  // guaranteed absolute error per kernel element
  int max_level = 8;        // deepest tanh-sinh refinement
};

// Component pairs are stored once per unordered pair; the kernel is
// symmetric in (beta, alpha) for every offset.
inline constexpr int kPairs = 6;
inline int pair_index(int beta, int alpha) {
  static constexpr int map[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
  return map[beta][alpha];
}

struct InteractionKernel {
  int U = 0, V = 0, W = 0;
  double dx = 0, dy = 0, dz = 0, dt = 0;
  int ell = 0;
  double tolerance = 0;
  // S[pair][offset][lag], offset index from offset_index(), lag 0..ell
  std::vector<double> values;
  // identity coefficient per lag: Gram values plus any regularization
  std::vector<double> ident;
  // (eps-1)/eps per voxel
  std::vector<double> contrast;
  // worst quadrature error estimate and where it occurred
  double max_error_estimate = 0;

  int lags() const { return ell + 1; }
  int noff() const { return (2 * U - 1) * (2 * V - 1) * (2 * W - 1); }
  int M() const { return U * V * W; }
  int offset_index(int du, int dv, int dw) const {
    return ((dw + W - 1) * (2 * V - 1) + (dv + V - 1)) * (2 * U - 1) + (du + U - 1);
  }
  std::array<int, 3> offset_of(int oi) const {
    const int nu = 2 * U - 1, nv = 2 * V - 1;
    return {oi % nu - (U - 1), (oi / nu) % nv - (V - 1), oi / (nu * nv) - (W - 1)};
  }
  const double* lag_row(int pair, int oi) const {
    return values.data() + (static_cast<std::size_t>(pair) * noff() + oi) * lags();
  }
  double* lag_row(int pair, int oi) {
    return values.data() + (static_cast<std::size_t>(pair) * noff() + oi) * lags();
  }
  double S(int beta, int alpha, int du, int dv, int dw, int k) const {
    if (k < 0 || k > ell) return 0.0;
    return lag_row(pair_index(beta, alpha), offset_index(du, dv, dw))[k];
  }
  // Full matrix element Z^{beta,alpha}_{m,m',k}, zero-based voxel indices.
  double Z(int beta, int alpha, int m, int mp, int k) const;
  Vec3 edges() const { return {dx, dy, dz}; }
};

int lag_count(const VoxelGrid& g, double dt);

// Builds S from face integrals of the retarded potential. Throws
// NumericalError naming the worst offset and lag when the error estimate
// exceeds spec.tolerance.
InteractionKernel assemble_kernel(const VoxelGrid& g, double dt, const QuadratureSpec& spec = {});

// Sets contrast from the grid permittivity and resets ident to the Gram values.
void attach_grid(InteractionKernel& K, const VoxelGrid& g);

// Loads the cache when it matches the grid, otherwise assembles and writes it.
InteractionKernel load_or_assemble(const std::string& path, const VoxelGrid& g, double dt,
                                   const QuadratureSpec& spec = {});
void save_kernel(const std::string& path, const InteractionKernel& K);
// Returns false when the file is missing or was built for another geometry.
bool load_kernel(const std::string& path, const VoxelGrid& g, double dt, double tolerance,
                 InteractionKernel& out);

struct PlaneWaveSpec {
  double E0 = 1.0;
  double sigma = 2.0;  // lightmeters
  double t0 = 3.42;    // lightmeters
  Vec3 k_hat{0, 0, -1};
  Vec3 p_hat{1, 0, 0};
};

void validate(const PlaneWaveSpec& w);

// Incident field along p_hat at r (meters), t (seconds).
double incident_field(const PlaneWaveSpec& w, const Vec3& r, double t);

// Excitation at step n, component-major layout [beta][m].
std::vector<double> excitation_vector(const VoxelGrid& g, const PlaneWaveSpec& w, int n, double dt,
                                      int gauss_order = 2);

double incident_spectrum_magnitude(const PlaneWaveSpec& w, double f_hz);

}  // namespace motjvie

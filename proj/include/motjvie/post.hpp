#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "motjvie/grid.hpp"
#include "motjvie/kernel.hpp"

namespace motjvie {

struct TimeSeries {
  double dt = 0;       // seconds
  int start_step = 1;  // step index of the first sample
  std::vector<Vec3> points;
  // samples[p][n] = (x, y, z) at probe p, step start_step + n
  std::vector<std::vector<Vec3>> samples;

  std::size_t steps() const { return samples.empty() ? 0 : samples.front().size(); }
};

// Resolves probe points to voxel indices. Throws ConfigError naming the
// nearest centre when a point is not a voxel centre.
std::vector<int> probe_voxels(const VoxelGrid& g, const std::vector<Vec3>& points);

// Collects per-step coefficient vectors ([beta][m] layout) at the probes.
class Prober {
 public:
  Prober(const VoxelGrid& g, const std::vector<Vec3>& points, double dt);
  void record(const std::vector<double>& J);
  const TimeSeries& raw() const { return raw_; }
  // (J_n + J_{n-1}) / 2, the basis evaluated at t_n
  TimeSeries spline() const;

 private:
  std::vector<int> vox_;
  std::size_t M_ = 0;
  TimeSeries raw_;
};

TimeSeries spline_samples(const TimeSeries& raw);

// cos^2 ramp over the final ceil(fraction * N) samples.
TimeSeries taper(const TimeSeries& s, double fraction = 0.2);
std::vector<double> taper_window(std::size_t n, double fraction);

// DFT by direct summation at frequency f (Hz), times in seconds.
std::array<std::complex<double>, 3> dft(const std::vector<Vec3>& x, double dt, int start_step, double f);

struct Spectrum {
  std::vector<double> freqs;  // kept frequencies
  std::vector<double> excluded;
  // mag[p][i] = (|Hx|, |Hy|, |Hz|) at freqs[i]
  std::vector<std::vector<Vec3>> mag;
};

// |H^a| = |DFT| / (eps0 (eps_r - 1) |e^i(f)|). Frequencies with
// |e^i| / E0 below floor are excluded. eps_r holds the permittivity per probe.
Spectrum frequency_response(const TimeSeries& s, const PlaneWaveSpec& w,
                            const std::vector<double>& eps_r, const std::vector<double>& freqs,
                            double floor = 1e-10);

double combined_magnitude(double hx, double hy, double hz);

// sqrt(sum (|H| - |H_ref|)^2 / sum |H_ref|^2) over probes and components,
// per frequency. Throws NumericalError when the reference norm is zero.
std::vector<double> l2_relative_error(const Spectrum& h, const Spectrum& ref);

void write_timeseries(const std::string& path, const TimeSeries& s);
TimeSeries read_timeseries(const std::string& path);
void write_spectrum(const std::string& path, const Spectrum& s);

}  // namespace motjvie

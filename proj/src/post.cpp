#include "motjvie/post.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "motjvie/common.hpp"

namespace motjvie {

std::vector<int> probe_voxels(const VoxelGrid& g, const std::vector<Vec3>& points) {
  std::vector<int> out;
  const double e[3] = {g.dx, g.dy, g.dz};
  const int n[3] = {g.U, g.V, g.W};
  for (const Vec3& p : points) {
    int idx[3];
    bool ok = true;
    for (int a = 0; a < 3; ++a) {
      const double f = (p[a] - g.origin[a]) / e[a] - 0.5;
      idx[a] = std::clamp(static_cast<int>(std::lround(f)), 0, n[a] - 1);
      ok = ok && std::abs(f - idx[a]) <= 1e-6;
    }
    const int m = g.flat(idx[0], idx[1], idx[2]);
    if (!ok) {
      const Vec3 c = g.center(m);
      std::ostringstream os;
      os.precision(9);
      os << "probe (" << p[0] << ", " << p[1] << ", " << p[2]
         << ") is not a voxel centre; nearest centre is (" << c[0] << ", " << c[1] << ", " << c[2]
         << ")";
      throw ConfigError(os.str());
    }
    out.push_back(m);
  }
  return out;
}

Prober::Prober(const VoxelGrid& g, const std::vector<Vec3>& points, double dt)
    : vox_(probe_voxels(g, points)), M_(g.M()) {
  raw_.dt = dt;
  raw_.points = points;
  raw_.samples.resize(points.size());
}

void Prober::record(const std::vector<double>& J) {
  for (std::size_t p = 0; p < vox_.size(); ++p)
    raw_.samples[p].push_back({J[vox_[p]], J[M_ + vox_[p]], J[2 * M_ + vox_[p]]});
}

TimeSeries Prober::spline() const { return spline_samples(raw_); }

TimeSeries spline_samples(const TimeSeries& raw) {
  TimeSeries s = raw;
  for (auto& series : s.samples)
    for (std::size_t n = series.size(); n-- > 0;) {
      const Vec3 prev = n > 0 ? series[n - 1] : Vec3{0, 0, 0};
      for (int a = 0; a < 3; ++a) series[n][a] = 0.5 * (series[n][a] + prev[a]);
    }
  return s;
}

std::vector<double> taper_window(std::size_t n, double fraction) {
  if (!(fraction > 0 && fraction < 1)) throw ConfigError("taper fraction must lie in (0, 1)");
  std::vector<double> w(n, 1.0);
  const std::size_t t = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(fraction * n)));
  for (std::size_t i = 0; i < t; ++i) {
    // tau runs from 1/t at the first tapered sample to 1 at the last
    const double tau = static_cast<double>(i + 1) / t;
    const double c = std::cos(0.5 * pi * tau);
    w[n - t + i] = c * c;
  }
  if (n > 0) w[n - 1] = 0.0;
  return w;
}

TimeSeries taper(const TimeSeries& s, double fraction) {
  TimeSeries out = s;
  const auto w = taper_window(s.steps(), fraction);
  for (auto& series : out.samples)
    for (std::size_t n = 0; n < series.size(); ++n)
      for (int a = 0; a < 3; ++a) series[n][a] *= w[n];
  return out;
}

std::array<std::complex<double>, 3> dft(const std::vector<Vec3>& x, double dt, int start_step,
                                        double f) {
  const double h = dt * c0;  // lightmeters, so a unit-area pulse maps to E0
  const double r = f * dt;   // cycles per step
  // Near the exclusion floor the result is ~1e-10 of the terms, so the phase
  // is reduced exactly (fma remainder) and the sum is compensated.
  std::array<std::complex<double>, 3> sum{}, comp{};
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double k = start_step + static_cast<double>(n);
    const double hi = k * r;
    const double lo = std::fma(k, r, -hi);
    const double cyc = (hi - std::nearbyint(hi)) + lo;
    const std::complex<double> e = std::polar(h, -2.0 * pi * cyc);
    for (int a = 0; a < 3; ++a) {
      const std::complex<double> y = x[n][a] * e - comp[a];
      const std::complex<double> t = sum[a] + y;
      comp[a] = (t - sum[a]) - y;
      sum[a] = t;
    }
  }
  return sum;
}

Spectrum frequency_response(const TimeSeries& s, const PlaneWaveSpec& w,
                            const std::vector<double>& eps_r, const std::vector<double>& freqs,
                            double floor) {
  if (eps_r.size() != s.samples.size())
    throw ConfigError("one permittivity per probe is required");
  for (double e : eps_r)
    if (!(e > 1.0)) throw ConfigError("frequency response needs eps_r > 1 at every probe");
  Spectrum out;
  for (double f : freqs) {
    if (incident_spectrum_magnitude(w, f) / w.E0 < floor)
      out.excluded.push_back(f);
    else
      out.freqs.push_back(f);
  }
  out.mag.resize(s.samples.size());
  for (std::size_t p = 0; p < s.samples.size(); ++p)
    for (double f : out.freqs) {
      const auto X = dft(s.samples[p], s.dt, s.start_step, f);
      const double denom = eps0 * (eps_r[p] - 1.0) * incident_spectrum_magnitude(w, f);
      out.mag[p].push_back({std::abs(X[0]) / denom, std::abs(X[1]) / denom, std::abs(X[2]) / denom});
    }
  return out;
}

double combined_magnitude(double hx, double hy, double hz) { return std::sqrt(hx * hx + hy * hy + hz * hz); }

std::vector<double> l2_relative_error(const Spectrum& h, const Spectrum& ref) {
  if (h.mag.size() != ref.mag.size() || h.freqs.size() != ref.freqs.size())
    throw ConfigError("spectra have different probe or frequency sets");
  std::vector<double> err(h.freqs.size());
  for (std::size_t i = 0; i < h.freqs.size(); ++i) {
    double num = 0, den = 0;
    for (std::size_t p = 0; p < h.mag.size(); ++p)
      for (int a = 0; a < 3; ++a) {
        const double d = h.mag[p][i][a] - ref.mag[p][i][a];
        num += d * d;
        den += ref.mag[p][i][a] * ref.mag[p][i][a];
      }
    if (den == 0) throw NumericalError("L2 error undefined: zero reference at f = " + std::to_string(h.freqs[i]));
    err[i] = std::sqrt(num / den);
  }
  return err;
}

namespace {

std::string probes_header(const std::vector<Vec3>& pts) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < pts.size(); ++i)
    os << (i ? ";" : "") << pts[i][0] << ',' << pts[i][1] << ',' << pts[i][2];
  return os.str();
}

}  // namespace

void write_timeseries(const std::string& path, const TimeSeries& s) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write " + path);
  std::fprintf(f, "# dt=%.17g probes=%s\n", s.dt, probes_header(s.points).c_str());
  for (std::size_t n = 0; n < s.steps(); ++n) {
    std::fprintf(f, "%zu", s.start_step + n);
    for (const auto& series : s.samples)
      for (int a = 0; a < 3; ++a) std::fprintf(f, " %.16e", series[n][a]);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw ConfigError("failed writing " + path);
}

TimeSeries read_timeseries(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  TimeSeries s;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto dpos = line.find("dt="), ppos = line.find("probes=");
      if (dpos == std::string::npos || ppos == std::string::npos) continue;
      s.dt = std::stod(line.substr(dpos + 3));
      std::stringstream ps(line.substr(ppos + 7));
      std::string item;
      while (std::getline(ps, item, ';')) {
        Vec3 p{};
        if (std::sscanf(item.c_str(), "%lf,%lf,%lf", &p[0], &p[1], &p[2]) != 3)
          throw ConfigError(path + ": bad probe list");
        s.points.push_back(p);
      }
      s.samples.resize(s.points.size());
      header = true;
      continue;
    }
    if (!header) throw ConfigError(path + ": missing '# dt=... probes=...' header");
    std::istringstream ls(line);
    long step = 0;
    ls >> step;
    if (s.steps() == 0) s.start_step = static_cast<int>(step);
    for (auto& series : s.samples) {
      Vec3 v{};
      ls >> v[0] >> v[1] >> v[2];
      if (!ls) throw ConfigError(path + ": short row at step " + std::to_string(step));
      series.push_back(v);
    }
  }
  if (!header) throw ConfigError(path + ": missing header");
  return s;
}

void write_spectrum(const std::string& path, const Spectrum& s) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot write " + path);
  std::fprintf(f, "# f_Hz |Hx| |Hy| |Hz| |H|\n");
  if (!s.excluded.empty())
    std::fprintf(f, "# excluded %zu frequencies below the incident spectrum floor, from %.6e Hz\n",
                 s.excluded.size(), s.excluded.front());
  for (std::size_t p = 0; p < s.mag.size(); ++p) {
    std::fprintf(f, "# probe %zu\n", p);
    for (std::size_t i = 0; i < s.freqs.size(); ++i) {
      const Vec3& h = s.mag[p][i];
      std::fprintf(f, "%.16e %.16e %.16e %.16e %.16e\n", s.freqs[i], h[0], h[1], h[2],
                   combined_magnitude(h[0], h[1], h[2]));
    }
  }
  if (std::fclose(f) != 0) throw ConfigError("failed writing " + path);
}

}  // namespace motjvie

#include "motjvie/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "motjvie/common.hpp"

namespace motjvie {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double effective_delta(const RunConfig& c, std::size_t M) {
  if (c.fir_order == 0) return 0.0;
  return c.delta_auto ? recommend_delta(M) : c.delta;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double f = pos - i;
  return i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i];
}

std::vector<double> monitor_weights(std::size_t n) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> w(n);
  for (double& x : w) x = d(rng);
  return w;
}

}  // namespace

InteractionKernel prepare_kernel(const RunConfig& c, const VoxelGrid& g, std::ostream* log) {
  QuadratureSpec q;
  q.tolerance = c.kernel_tolerance;
  const auto t = Clock::now();
  InteractionKernel K =
      c.kernel_cache.empty() ? assemble_kernel(g, c.dt, q) : load_or_assemble(c.kernel_cache, g, c.dt, q);
  attach_grid(K, g);
  if (log)
    *log << "kernel: " << g.U << "x" << g.V << "x" << g.W << " ell=" << K.ell
         << " error<=" << K.max_error_estimate << " (" << std::fixed << std::setprecision(2) << since(t)
         << " s)" << std::defaultfloat << "\n";
  if (c.truncation > 0) K = inject_truncation(K, c.truncation);
  if (c.fir_order > 0) K = regularize(K, make_fir(c.fir_order, effective_delta(c, g.M()), c.fir4_plus_last_tap));
  return K;
}

GrowthReport analyze_growth(const std::vector<double>& p, double window_fraction) {
  GrowthReport r;
  const std::size_t N = p.size();
  const std::size_t len = std::min(N, std::max<std::size_t>(40, static_cast<std::size_t>(window_fraction * N)));
  if (len < 20) return r;
  const std::size_t b = N - len;
  std::size_t flips = 0, pairs = 0;
  // least-squares rate of log |p| over the window
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t i = b; i < N; ++i) {
    if (p[i] == 0) continue;
    const double x = static_cast<double>(i - b), y = std::log(std::abs(p[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
    if (i > b && p[i - 1] != 0) {
      ++pairs;
      if ((p[i] > 0) != (p[i - 1] > 0)) ++flips;
    }
  }
  r.sign_flip_fraction = pairs ? static_cast<double>(flips) / pairs : 0.0;
  const double den = cnt * sxx - sx * sx;
  if (cnt >= 2 && den > 0) r.growth_per_step = std::exp((cnt * sxy - sx * sy) / den);
  // at least a doubling across the window, so noise-floor wander does not count
  r.alternating_growth = r.sign_flip_fraction >= 0.9 && r.growth_per_step > 1.0 &&
                         std::log(r.growth_per_step) * static_cast<double>(len) >= std::log(2.0);
  return r;
}

RunOutput run(const RunConfig& c, std::ostream& log) {
  RunOutput out;
  const VoxelGrid g = make_grid(c);
  Prober prober(g, c.probes, c.dt);  // bad probe points fail before any work
  const auto ta = Clock::now();
  const InteractionKernel K = prepare_kernel(c, g, &log);
  out.assemble_seconds = since(ta);
  out.ell = K.ell;
  out.kernel_error = K.max_error_estimate;
  out.delta = effective_delta(c, g.M());

  MarchOptions mo;
  mo.engine = c.engine;
  mo.z0.max_direct = c.z0_max_direct;
  Marcher mar(K, mo);
  if (c.resume && !c.checkpoint_path.empty() && std::filesystem::exists(c.checkpoint_path)) {
    mar.load_checkpoint(c.checkpoint_path);
    log << "resumed from " << c.checkpoint_path << " at step " << mar.steps_done() << "\n";
  }
  out.first_step = mar.steps_done() + 1;

  // the probe spline at the first resumed step needs the previous current
  std::vector<Vec3> before;
  if (const double* Jp = mar.ring().get(out.first_step - 1)) {
    const auto vox = probe_voxels(g, c.probes);
    const std::size_t M = g.M();
    for (int m : vox) before.push_back({Jp[m], Jp[M + m], Jp[2 * M + m]});
  }

  const auto w = monitor_weights(3 * g.M());
  for (int n = out.first_step; n <= c.steps; ++n) {
    const auto E = excitation_vector(g, c.wave, n, c.dt, c.gauss_order);
    const auto ts = Clock::now();
    const auto& J = mar.step(E);
    out.step_seconds.push_back(since(ts));
    prober.record(J);
    double mx = 0;
    for (double x : J) mx = std::max(mx, std::abs(x));
    out.max_abs.push_back(mx);
    out.monitor.push_back(std::inner_product(J.begin(), J.end(), w.begin(), 0.0));
    if (c.checkpoint_every > 0 && !c.checkpoint_path.empty() && n % c.checkpoint_every == 0)
      mar.save_checkpoint(c.checkpoint_path);
  }
  if (!c.checkpoint_path.empty() && c.checkpoint_every > 0) mar.save_checkpoint(c.checkpoint_path);
  out.history_seconds = mar.history_seconds();
  out.engine_bytes = mar.engine().memory_bytes();

  out.raw = prober.raw();
  out.raw.start_step = out.first_step;
  out.spline = spline_samples(out.raw);
  for (std::size_t p = 0; p < before.size() && out.spline.steps() > 0; ++p)
    for (int a = 0; a < 3; ++a) out.spline.samples[p][0][a] += 0.5 * before[p][a];

  const std::size_t N = out.max_abs.size();
  for (std::size_t i = 0; i < N; ++i) {
    if (i < N / 2) out.early_max = std::max(out.early_max, out.max_abs[i]);
    if (i >= N - std::max<std::size_t>(1, N / 10)) out.late_max = std::max(out.late_max, out.max_abs[i]);
  }
  out.growth = analyze_growth(out.monitor);

  if (!c.timeseries_path.empty() && !c.probes.empty()) {
    write_timeseries(c.timeseries_path, out.spline);
    write_timeseries(c.timeseries_path + ".raw", out.raw);
  }

  nlohmann::json j;
  j["grid"] = {g.U, g.V, g.W};
  j["unknowns"] = 3 * g.M();
  j["engine"] = mar.engine().name();
  j["dt_s"] = c.dt;
  j["ell"] = K.ell;
  j["first_step"] = out.first_step;
  j["last_step"] = c.steps;
  j["kernel"] = {{"assemble_s", out.assemble_seconds}, {"error_estimate", out.kernel_error}};
  j["regularization"] = {{"order", c.fir_order}, {"delta", out.delta}, {"truncation", c.truncation}};
  const auto& st = out.step_seconds;
  j["step_s"] = {{"mean", st.empty() ? 0.0 : std::accumulate(st.begin(), st.end(), 0.0) / st.size()},
                 {"p50", percentile(st, 0.5)},
                 {"p90", percentile(st, 0.9)},
                 {"p99", percentile(st, 0.99)},
                 {"max", st.empty() ? 0.0 : *std::max_element(st.begin(), st.end())}};
  j["history_s_per_step"] = st.empty() ? 0.0 : out.history_seconds / st.size();
  j["z0"] = {{"direct", mar.z0().direct()}, {"nonzeros", mar.z0().nonzeros()}};
  j["memory_mb"] = {{"engine", out.engine_bytes / 1048576.0}, {"peak_rss", peak_rss_bytes() / 1048576.0}};
  j["max_abs_J"] = {{"first_half", out.early_max}, {"last_tenth", out.late_max}};
  j["late_time"] = {{"bounded", out.late_max <= out.early_max},
                    {"alternating_growth", out.growth.alternating_growth},
                    {"sign_flip_fraction", out.growth.sign_flip_fraction},
                    {"growth_per_step", out.growth.growth_per_step}};
  out.summary_json = j.dump(2);
  if (!c.summary_path.empty()) {
    std::ofstream os(c.summary_path);
    if (!(os << out.summary_json << "\n")) throw ConfigError("cannot write " + c.summary_path);
  }
  return out;
}

double complexity_model(EngineKind e, double M) {
  switch (e) {
    case EngineKind::direct: return M * M;
    case EngineKind::spatial: return std::pow(M, 4.0 / 3.0) * std::log2(M);
    case EngineKind::hierarchical: return M * std::log2(M) * std::log2(M);
  }
  return M;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw NumericalError("slope fit needs positive samples");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0) throw NumericalError("slope fit: all sizes equal");
  return (n * sxy - sx * sy) / den;
}

std::string BenchResult::text() const {
  std::ostringstream os;
  os << "engine " << engine_name(engine) << "\n";
  os << std::setw(5) << "n" << std::setw(9) << "M" << std::setw(7) << "steps" << std::setw(14) << "hist_s/step"
     << std::setw(12) << "assemble_s" << std::setw(12) << "engine_MB" << "\n";
  for (const auto& r : rows)
    os << std::setw(5) << r.n << std::setw(9) << r.M << std::setw(7) << r.steps << std::setw(14)
       << std::setprecision(5) << r.history_seconds_per_step << std::setw(12) << std::setprecision(4)
       << r.assemble_seconds << std::setw(12) << std::setprecision(4) << r.engine_bytes / 1048576.0 << "\n";
  if (fitted) os << "log-log slope against the complexity model: " << std::setprecision(4) << slope << "\n";
  return os.str();
}

BenchResult bench(const RunConfig& c, const std::vector<int>& sizes, EngineKind engine, int steps,
                  std::ostream& log) {
  if (sizes.empty()) throw ConfigError("bench: no sizes given");
  if (steps < 1) throw ConfigError("bench: steps must be positive");
  BenchResult res;
  res.engine = engine;
  const Vec3 h{c.box[0] / c.U, c.box[1] / c.V, c.box[2] / c.W};
  QuadratureSpec q;
  q.tolerance = c.kernel_tolerance;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  for (int n : sizes) {
    if (n < 1) throw ConfigError("bench: sizes must be positive");
    ShapeSpec s;
    s.kind = ShapeSpec::Kind::cube;
    const Vec3 box{n * h[0], n * h[1], n * h[2]};
    s.center = {0.5 * box[0], 0.5 * box[1], 0.5 * box[2]};
    s.size = 2.0 * std::max({box[0], box[1], box[2]});
    s.eps = c.shape.eps > 1.0 ? c.shape.eps : 12.0;
    const VoxelGrid g = build_grid(s, n, n, n, box);

    BenchRow row;
    row.n = n;
    row.M = g.M();
    const auto ta = Clock::now();
    InteractionKernel K = assemble_kernel(g, c.dt, q);
    attach_grid(K, g);
    row.assemble_seconds = since(ta);

    MarchOptions mo;
    mo.engine = engine;
    mo.z0.max_direct = c.z0_max_direct;
    Marcher mar(K, mo);
    // whole firing cycles so every level contributes its average share
    int cycle = 1;
    if (engine == EngineKind::hierarchical)
      for (const auto& L : plan_levels(K).levels) cycle = std::lcm(cycle, L.block);
    row.steps = (steps + cycle - 1) / cycle * cycle;

    std::vector<std::vector<double>> past(K.ell, std::vector<double>(3 * g.M()));
    for (auto& v : past)
      for (double& x : v) x = nd(rng);
    mar.prefill(past);
    const std::vector<double> E(3 * g.M(), 0.0);
    const double h0 = mar.history_seconds();
    for (int i = 0; i < row.steps; ++i) mar.step(E);
    row.history_seconds_per_step = (mar.history_seconds() - h0) / row.steps;
    row.engine_bytes = mar.engine().memory_bytes();
    log << "bench n=" << n << " M=" << row.M << " ell=" << K.ell << " " << row.history_seconds_per_step
        << " s/step\n";
    res.rows.push_back(row);
  }
  if (res.rows.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& r : res.rows) {
      x.push_back(complexity_model(engine, static_cast<double>(r.M)));
      y.push_back(r.history_seconds_per_step);
    }
    res.slope = loglog_slope(x, y);
    res.fitted = true;
  }
  return res;
}

PdsaReport run_pdsa(const RunConfig& c, const std::vector<int>& n_list, PdsaMethod m, std::ostream& log) {
  const VoxelGrid g = make_grid(c);
  const InteractionKernel K = prepare_kernel(c, g, &log);
  return pdsa_check(K, n_list.empty() ? std::vector<int>{K.ell} : n_list, m);
}

Spectrum run_spectrum(const RunConfig& c, const std::string& series_path, const std::string& out_path) {
  const TimeSeries s = read_timeseries(series_path);
  if (s.points.empty()) throw ConfigError(series_path + ": no probes");
  const VoxelGrid g = make_grid(c);
  std::vector<double> eps;
  for (int m : probe_voxels(g, s.points)) eps.push_back(g.eps_r[m]);
  std::vector<double> freqs(c.f_count);
  for (int i = 0; i < c.f_count; ++i)
    freqs[i] = c.f_count == 1 ? c.f_min : c.f_min + (c.f_max - c.f_min) * i / (c.f_count - 1);
  const Spectrum h = frequency_response(taper(s, c.taper_fraction), c.wave, eps, freqs);
  if (!out_path.empty()) write_spectrum(out_path, h);
  return h;
}

std::string plan_dump(const RunConfig& c) {
  const VoxelGrid g = make_grid(c);
  // the plan depends on the geometry only, so no kernel values are needed
  InteractionKernel K;
  K.U = g.U;
  K.V = g.V;
  K.W = g.W;
  K.dx = g.dx;
  K.dy = g.dy;
  K.dz = g.dz;
  K.dt = c.dt;
  K.ell = lag_count(g, c.dt);
  return plan_levels(K).dump(g.M());
}

}  // namespace motjvie

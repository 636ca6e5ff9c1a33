// motjvie command line: run, bench, pdsa, spectrum, plan.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "motjvie/common.hpp"
#include "motjvie/driver.hpp"

using namespace motjvie;

namespace {

std::vector<int> int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("expected a comma separated integer list, got '" + s + "'");
    }
    if (used != tok.size()) throw ConfigError("expected a comma separated integer list, got '" + s + "'");
    out.push_back(v);
  }
  return out;
}

PdsaMethod parse_method(const std::string& s) {
  if (s == "auto") return PdsaMethod::automatic;
  if (s == "dense") return PdsaMethod::dense;
  if (s == "matrix-free") return PdsaMethod::matrix_free;
  throw ConfigError("unknown pdsa method '" + s + "' (auto, dense, matrix-free)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient volume integral equation solver on voxel grids"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides MOTJVIE_THREADS)");

  std::string config;
  std::string engine, sizes = "8,12,16,24", nlist, method = "auto", series, out;
  int steps = 0, bench_steps = 64;

  auto* run = app.add_subcommand("run", "march a configuration and write probes and a summary");
  run->add_option("config", config, "INI configuration")->required();
  run->add_option("--engine", engine, "direct, spatial or hierarchical");
  run->add_option("--steps", steps, "override time.steps");

  auto* bench = app.add_subcommand("bench", "per-step history timing over cube sizes");
  bench->add_option("config", config, "INI configuration (voxel size, dt, eps)")->required();
  bench->add_option("--sizes", sizes, "comma separated cube edges in voxels");
  bench->add_option("--engine", engine, "direct, spatial or hierarchical");
  bench->add_option("--steps", bench_steps, "timed steps per size");

  auto* pdsa = app.add_subcommand("pdsa", "positive definiteness of the D_n matrices");
  pdsa->add_option("config", config, "INI configuration")->required();
  pdsa->add_option("--n", nlist, "comma separated n values (default ell)");
  pdsa->add_option("--method", method, "auto, dense or matrix-free");

  auto* spec = app.add_subcommand("spectrum", "frequency response of a probe time series");
  spec->add_option("config", config, "INI configuration")->required();
  spec->add_option("--series", series, "time series file written by run")->required();
  spec->add_option("--out", out, "spectrum output file");

  auto* plan = app.add_subcommand("plan", "print the hierarchical level plan");
  plan->add_option("config", config, "INI configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    RunConfig c = parse_config_file(config);
    if (!engine.empty()) c.engine = parse_engine(engine);

    if (*run) {
      if (steps > 0) c.steps = steps;
      const RunOutput r = motjvie::run(c, std::cerr);
      std::cout << r.summary_json << "\n";
      if (r.growth.alternating_growth)
        std::cerr << "warning: alternating late-time growth detected (" << r.growth.growth_per_step
                  << " per step)\n";
    } else if (*bench) {
      const EngineKind e = engine.empty() ? EngineKind::hierarchical : c.engine;
      std::cout << motjvie::bench(c, int_list(sizes), e, bench_steps, std::cerr).text();
    } else if (*pdsa) {
      std::cout << run_pdsa(c, int_list(nlist), parse_method(method), std::cerr).text();
    } else if (*spec) {
      const Spectrum h = run_spectrum(c, series, out);
      std::cerr << h.freqs.size() << " frequencies kept, " << h.excluded.size() << " excluded\n";
      if (out.empty()) {
        for (std::size_t i = 0; i < h.freqs.size(); ++i) {
          std::cout << h.freqs[i];
          for (const auto& p : h.mag) std::cout << " " << combined_magnitude(p[i][0], p[i][1], p[i][2]);
          std::cout << "\n";
        }
      }
    } else if (*plan) {
      std::cout << plan_dump(c);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IndexError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::bad_alloc&) {
    std::cerr << "numerical failure: out of memory\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// Python bindings: grids, kernel assembly, marching, stability checks and
// the configuration driver.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "motjvie/common.hpp"
#include "motjvie/driver.hpp"
#include "motjvie/hier.hpp"

namespace py = pybind11;
using namespace motjvie;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> from_array(const Array& a, std::size_t expect, const char* what) {
  if (static_cast<std::size_t>(a.size()) != expect)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(expect) + " values, got " +
                      std::to_string(a.size()));
  return std::vector<double>(a.data(), a.data() + a.size());
}

ShapeSpec::Kind shape_kind(const std::string& s) {
  if (s == "cube") return ShapeSpec::Kind::cube;
  if (s == "sphere") return ShapeSpec::Kind::sphere;
  if (s == "slab") return ShapeSpec::Kind::layered_slab;
  if (s == "map") return ShapeSpec::Kind::explicit_map;
  throw ConfigError("unknown shape '" + s + "'");
}

VoxelGrid py_build_grid(int U, int V, int W, const Vec3& box, const std::string& shape, double eps,
                        std::optional<Vec3> center, std::optional<double> size, std::optional<Array> values,
                        const Vec3& origin) {
  ShapeSpec s;
  s.kind = shape_kind(shape);
  s.eps = eps;
  s.center = center.value_or(Vec3{origin[0] + 0.5 * box[0], origin[1] + 0.5 * box[1], origin[2] + 0.5 * box[2]});
  s.size = size.value_or(std::min({box[0], box[1], box[2]}));
  if (values) s.values = from_array(*values, static_cast<std::size_t>(U) * V * W, "values");
  return build_grid(s, U, V, W, box, origin);
}

py::dict entry_dict(const PdsaEntry& e) {
  py::dict d;
  d["n"] = e.n;
  d["verdict"] = verdict_name(e.verdict);
  d["lambda_min"] = e.lambda_min;
  d["lambda_max"] = e.lambda_max;
  d["log_scale"] = e.log_scale;
  d["method"] = e.method;
  d["iterations"] = e.iterations;
  d["seconds"] = e.seconds;
  return d;
}

PdsaMethod method_of(const std::string& s) {
  if (s == "auto") return PdsaMethod::automatic;
  if (s == "dense") return PdsaMethod::dense;
  if (s == "matrix-free" || s == "matrix_free") return PdsaMethod::matrix_free;
  throw ConfigError("unknown pdsa method '" + s + "'");
}

Array series_array(const TimeSeries& s) {
  Array a({static_cast<py::ssize_t>(s.samples.size()), static_cast<py::ssize_t>(s.steps()), py::ssize_t{3}});
  auto r = a.mutable_unchecked<3>();
  for (std::size_t p = 0; p < s.samples.size(); ++p)
    for (std::size_t n = 0; n < s.steps(); ++n)
      for (int c = 0; c < 3; ++c) r(p, n, c) = s.samples[p][n][c];
  return a;
}

}  // namespace

PYBIND11_MODULE(_motjvie, m) {
  m.doc() = "Marching-on-in-time volume integral equation solver";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IndexError>(m, "IndexError", PyExc_IndexError);

  m.attr("c0") = c0;
  m.attr("eps0") = eps0;
  m.def("set_threads", &set_thread_count, py::arg("n"));
  m.def("threads", &thread_count);

  py::class_<VoxelGrid>(m, "Grid")
      .def_readonly("U", &VoxelGrid::U)
      .def_readonly("V", &VoxelGrid::V)
      .def_readonly("W", &VoxelGrid::W)
      .def_readonly("dx", &VoxelGrid::dx)
      .def_readonly("dy", &VoxelGrid::dy)
      .def_readonly("dz", &VoxelGrid::dz)
      .def_readonly("origin", &VoxelGrid::origin)
      .def_property_readonly("M", &VoxelGrid::M)
      .def_property_readonly("eps_r", [](const VoxelGrid& g) { return to_array(g.eps_r); })
      .def("center", &VoxelGrid::center, py::arg("i"))
      .def("linear_index", [](const VoxelGrid& g, int u, int v, int w) { return linear_index(u, v, w, g); })
      .def("inverse_index", [](const VoxelGrid& g, int i) { return inverse_index(i, g); });

  m.def("build_grid", &py_build_grid, py::arg("U"), py::arg("V"), py::arg("W"), py::arg("box"),
        py::arg("shape") = "cube", py::arg("eps") = 1.0, py::arg("center") = py::none(),
        py::arg("size") = py::none(), py::arg("values") = py::none(), py::arg("origin") = Vec3{0, 0, 0});

  py::class_<InteractionKernel>(m, "Kernel")
      .def_readonly("U", &InteractionKernel::U)
      .def_readonly("V", &InteractionKernel::V)
      .def_readonly("W", &InteractionKernel::W)
      .def_readonly("dt", &InteractionKernel::dt)
      .def_readonly("ell", &InteractionKernel::ell)
      .def_readonly("max_error_estimate", &InteractionKernel::max_error_estimate)
      .def_property_readonly("ident", [](const InteractionKernel& K) { return to_array(K.ident); })
      .def("S", &InteractionKernel::S, py::arg("beta"), py::arg("alpha"), py::arg("du"), py::arg("dv"),
           py::arg("dw"), py::arg("k"))
      .def("Z", &InteractionKernel::Z, py::arg("beta"), py::arg("alpha"), py::arg("m"), py::arg("mp"), py::arg("k"));

  m.def(
      "assemble_kernel",
      [](const VoxelGrid& g, double dt, double tolerance, const std::string& cache) {
        QuadratureSpec q;
        q.tolerance = tolerance;
        py::gil_scoped_release release;
        InteractionKernel K = cache.empty() ? assemble_kernel(g, dt, q) : load_or_assemble(cache, g, dt, q);
        attach_grid(K, g);
        return K;
      },
      py::arg("grid"), py::arg("dt"), py::arg("tolerance") = 1e-7, py::arg("cache") = "");

  m.def(
      "excitation",
      [](const VoxelGrid& g, int n, double dt, double E0, double sigma, double t0, const Vec3& k_hat,
         const Vec3& p_hat, int order) {
        PlaneWaveSpec w{E0, sigma, t0, k_hat, p_hat};
        validate(w);
        return to_array(excitation_vector(g, w, n, dt, order));
      },
      py::arg("grid"), py::arg("n"), py::arg("dt"), py::arg("E0") = 1.0, py::arg("sigma") = 2.0,
      py::arg("t0") = 3.42, py::arg("k_hat") = Vec3{0, 0, -1}, py::arg("p_hat") = Vec3{1, 0, 0},
      py::arg("gauss_order") = 2);

  // The marcher keeps a reference to its kernel; keep_alive ties lifetimes.
  py::class_<Marcher>(m, "Marcher")
      .def(py::init([](const InteractionKernel& K, const std::string& engine) {
             MarchOptions o;
             o.engine = parse_engine(engine);
             return std::make_unique<Marcher>(K, o);
           }),
           py::arg("kernel"), py::arg("engine") = "spatial", py::keep_alive<1, 2>())
      .def(
          "step",
          [](Marcher& mr, const Array& E) {
            const auto e = from_array(E, static_cast<std::size_t>(mr.ring().size()), "excitation");
            std::vector<double> J;
            {
              py::gil_scoped_release release;
              J = mr.step(e);
            }
            return to_array(J);
          },
          py::arg("E"))
      .def_property_readonly("steps_done", &Marcher::steps_done)
      .def_property_readonly("history_seconds", &Marcher::history_seconds)
      .def_property_readonly("engine", [](Marcher& mr) { return mr.engine().name(); })
      .def("save_checkpoint", &Marcher::save_checkpoint, py::arg("path"))
      .def("load_checkpoint", &Marcher::load_checkpoint, py::arg("path"));

  m.def(
      "fir",
      [](int order, double delta, bool plus_last_tap) { return make_fir(order, delta, plus_last_tap).coeffs; },
      py::arg("order"), py::arg("delta"), py::arg("fir4_plus_last_tap") = false);
  m.def("fir_closed_form", &fir_closed_form, py::arg("order"), py::arg("delta"), py::arg("theta"));
  m.def("recommend_delta", &recommend_delta, py::arg("M"));
  m.def(
      "regularize",
      [](const InteractionKernel& K, int order, double delta, bool plus_last_tap) {
        return regularize(K, make_fir(order, delta, plus_last_tap));
      },
      py::arg("kernel"), py::arg("order"), py::arg("delta"), py::arg("fir4_plus_last_tap") = false);
  m.def("inject_truncation", &inject_truncation, py::arg("kernel"), py::arg("eps"));
  m.def(
      "pdsa",
      [](const InteractionKernel& K, std::vector<int> n_list, const std::string& method) {
        if (n_list.empty()) n_list.push_back(K.ell);
        PdsaReport r;
        {
          py::gil_scoped_release release;
          r = pdsa_check(K, n_list, method_of(method));
        }
        py::list out;
        for (const auto& e : r.entries) out.append(entry_dict(e));
        return out;
      },
      py::arg("kernel"), py::arg("n") = std::vector<int>{}, py::arg("method") = "auto");
  m.def("plan", [](const InteractionKernel& K) { return plan_levels(K).dump(K.M()); }, py::arg("kernel"));

  m.def(
      "run",
      [](const std::string& config_text, std::optional<int> steps, const std::string& engine) {
        RunConfig c = parse_config_string(config_text);
        if (steps) c.steps = *steps;
        if (!engine.empty()) c.engine = parse_engine(engine);
        std::ostringstream log;
        RunOutput r;
        {
          py::gil_scoped_release release;
          r = run(c, log);
        }
        py::dict d;
        d["summary"] = py::module_::import("json").attr("loads")(r.summary_json);
        d["probes"] = series_array(r.spline);
        d["probes_raw"] = series_array(r.raw);
        d["max_abs"] = to_array(r.max_abs);
        d["first_step"] = r.first_step;
        d["log"] = log.str();
        return d;
      },
      py::arg("config"), py::arg("steps") = py::none(), py::arg("engine") = "",
      "Runs an INI configuration given as text and returns the summary and probe series.");
}

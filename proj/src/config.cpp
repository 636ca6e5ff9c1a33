#include "motjvie/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "motjvie/common.hpp"

namespace motjvie {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double to_double(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  double v = 0;
  std::string rest;
  if (!(is >> v) || (is >> rest)) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key + ": expected an integer");
  return static_cast<int>(v);
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::string t = text;
  for (char& c : t)
    if (c == ',') c = ' ';
  std::istringstream is(t);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(to_double(key, tok));
  return out;
}

Vec3 to_vec3(const std::string& key, const std::string& text) {
  const auto v = to_list(key, text);
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() != 3) throw ConfigError(key + ": expected one or three numbers");
  return {v[0], v[1], v[2]};
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(key + ": expected true or false");
}

// Reads section.key if present; records it so unknown keys can be reported.
class Reader {
 public:
  explicit Reader(const pt::ptree& t) : t_(t) {}
  bool get(const std::string& section, const std::string& key, std::string& out) {
    used_.insert(section + "." + key);
    const auto v = t_.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
    if (!v) return false;
    out = trim(*v);
    return true;
  }
  void check_unknown() const {
    for (const auto& sec : t_) {
      if (sec.second.empty() && !sec.second.data().empty())
        throw ConfigError("key '" + sec.first + "' must be inside a section");
      for (const auto& kv : sec.second) {
        const std::string full = sec.first + "." + kv.first;
        if (!used_.count(full)) throw ConfigError("unknown setting " + full);
      }
    }
  }

 private:
  const pt::ptree& t_;
  std::set<std::string> used_;
};

double parse_time(const std::string& text, bool bare_is_lm);

// Pulse parameters: bare numbers are lightmeters.
double lightmeters(const std::string& text) { return parse_time(text, true) * c0; }

RunConfig from_tree(const pt::ptree& tree, const std::string& base_dir) {
  RunConfig c;
  Reader r(tree);
  std::string s;

  // grid
  if (r.get("grid", "n", s)) c.U = c.V = c.W = to_int("grid.n", s);
  if (r.get("grid", "U", s)) c.U = to_int("grid.U", s);
  if (r.get("grid", "V", s)) c.V = to_int("grid.V", s);
  if (r.get("grid", "W", s)) c.W = to_int("grid.W", s);
  if (r.get("grid", "box", s)) c.box = to_vec3("grid.box", s);
  if (r.get("grid", "origin", s)) c.origin = to_vec3("grid.origin", s);
  std::string shape = "cube";
  r.get("grid", "shape", shape);
  shape = lower(shape);
  if (shape == "cube")
    c.shape.kind = ShapeSpec::Kind::cube;
  else if (shape == "sphere")
    c.shape.kind = ShapeSpec::Kind::sphere;
  else if (shape == "slab" || shape == "layered_slab")
    c.shape.kind = ShapeSpec::Kind::layered_slab;
  else if (shape == "map" || shape == "explicit_map")
    c.shape.kind = ShapeSpec::Kind::explicit_map;
  else
    throw ConfigError("grid.shape: unknown shape '" + shape + "'");
  c.shape.center = {c.origin[0] + 0.5 * c.box[0], c.origin[1] + 0.5 * c.box[1],
                    c.origin[2] + 0.5 * c.box[2]};
  c.shape.size = std::min({c.box[0], c.box[1], c.box[2]});
  if (r.get("grid", "center", s)) c.shape.center = to_vec3("grid.center", s);
  if (r.get("grid", "size", s)) c.shape.size = to_double("grid.size", s);
  if (r.get("grid", "eps", s)) c.shape.eps = to_double("grid.eps", s);
  if (r.get("grid", "slab_axis", s)) c.shape.slab_axis = to_int("grid.slab_axis", s);
  if (r.get("grid", "slab_bounds", s)) c.shape.slab_bounds = to_list("grid.slab_bounds", s);
  if (r.get("grid", "slab_eps", s)) c.shape.slab_eps = to_list("grid.slab_eps", s);
  if (r.get("grid", "map_file", s)) {
    const std::string path = (!s.empty() && s[0] != '/' && !base_dir.empty()) ? base_dir + "/" + s : s;
    std::ifstream is(path);
    if (!is) throw ConfigError("grid.map_file: cannot read " + path);
    double v;
    while (is >> v) c.shape.values.push_back(v);
    if (!is.eof()) throw ConfigError("grid.map_file: non-numeric entry in " + path);
  }

  // time
  if (!r.get("time", "dt", s)) throw ConfigError("time.dt is required");
  c.dt = parse_time(s, false);
  if (!(c.dt > 0)) throw ConfigError("time.dt must be positive");
  if (r.get("time", "steps", s)) c.steps = to_int("time.steps", s);
  if (c.steps < 1) throw ConfigError("time.steps must be at least 1");

  // solver
  if (r.get("solver", "engine", s)) c.engine = parse_engine(lower(s));
  if (r.get("solver", "tolerance", s)) c.kernel_tolerance = to_double("solver.tolerance", s);
  if (!(c.kernel_tolerance > 0)) throw ConfigError("solver.tolerance must be positive");
  if (r.get("solver", "kernel_cache", s)) c.kernel_cache = s;
  if (r.get("solver", "z0_max_direct", s)) c.z0_max_direct = to_int("solver.z0_max_direct", s);

  // excitation; pulse times are lightmeters unless suffixed
  if (r.get("excitation", "E0", s)) c.wave.E0 = to_double("excitation.E0", s);
  if (r.get("excitation", "sigma", s)) c.wave.sigma = lightmeters(s);
  if (r.get("excitation", "t0", s)) c.wave.t0 = lightmeters(s);
  if (r.get("excitation", "k_hat", s)) c.wave.k_hat = to_vec3("excitation.k_hat", s);
  if (r.get("excitation", "p_hat", s)) c.wave.p_hat = to_vec3("excitation.p_hat", s);
  if (r.get("excitation", "gauss_order", s)) c.gauss_order = to_int("excitation.gauss_order", s);
  if (c.gauss_order < 1 || c.gauss_order > 16) throw ConfigError("excitation.gauss_order must be 1..16");
  validate(c.wave);

  // regularization
  if (r.get("regularization", "order", s)) c.fir_order = to_int("regularization.order", s);
  if (c.fir_order != 0 && (c.fir_order < 2 || c.fir_order > 4))
    throw ConfigError("regularization.order must be 0, 2, 3 or 4");
  if (r.get("regularization", "delta", s)) {
    if (lower(s) == "auto") {
      c.delta_auto = true;
      if (c.fir_order == 0) c.fir_order = 3;
    } else {
      c.delta = to_double("regularization.delta", s);
      if (c.delta < 0) throw ConfigError("regularization.delta must be non-negative");
    }
  }
  if (r.get("regularization", "fir4_plus_last_tap", s)) c.fir4_plus_last_tap = to_bool("regularization.fir4_plus_last_tap", s);
  if (r.get("regularization", "truncation", s)) c.truncation = to_double("regularization.truncation", s);
  if (c.truncation < 0) throw ConfigError("regularization.truncation must be non-negative");

  // probes: "x y z; x y z"
  if (r.get("probes", "points", s)) {
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
      if (trim(item).empty()) continue;
      c.probes.push_back(to_vec3("probes.points", item));
    }
  }

  // output
  r.get("output", "timeseries", c.timeseries_path);
  r.get("output", "summary", c.summary_path);
  r.get("output", "checkpoint", c.checkpoint_path);
  if (r.get("output", "checkpoint_every", s)) c.checkpoint_every = to_int("output.checkpoint_every", s);
  if (r.get("output", "resume", s)) c.resume = to_bool("output.resume", s);

  // spectrum
  if (r.get("spectrum", "f_min", s)) c.f_min = to_double("spectrum.f_min", s);
  if (r.get("spectrum", "f_max", s)) c.f_max = to_double("spectrum.f_max", s);
  if (r.get("spectrum", "count", s)) c.f_count = to_int("spectrum.count", s);
  if (r.get("spectrum", "taper", s)) c.taper_fraction = to_double("spectrum.taper", s);
  if (c.f_count < 1 || c.f_max < c.f_min) throw ConfigError("spectrum: bad frequency range");

  r.check_unknown();
  return c;
}

double parse_time(const std::string& text, bool bare_is_lm) {
  std::string t = trim(text);
  double scale = bare_is_lm ? 1.0 / c0 : 1.0;
  std::string unit;
  std::size_t i = t.size();
  while (i > 0 && std::isalpha(static_cast<unsigned char>(t[i - 1]))) --i;
  unit = lower(t.substr(i));
  // keep exponent markers such as 1e-9 intact
  if (!unit.empty() && unit != "e") {
    t = trim(t.substr(0, i));
    if (unit == "lm")
      scale = 1.0 / c0;
    else if (unit == "s")
      scale = 1.0;
    else
      throw ConfigError("unknown time unit '" + unit + "' (use lm or s)");
  }
  return to_double("time", t) * scale;
}

}  // namespace

double parse_time(const std::string& text) { return parse_time(text, false); }

RunConfig parse_config_string(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  return from_tree(tree, "");
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(path + ": " + e.message() + " at line " + std::to_string(e.line()));
  }
  const auto slash = path.find_last_of('/');
  return from_tree(tree, slash == std::string::npos ? "" : path.substr(0, slash));
}

VoxelGrid make_grid(const RunConfig& c) { return build_grid(c.shape, c.U, c.V, c.W, c.box, c.origin); }

}  // namespace motjvie

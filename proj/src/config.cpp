#include "wchj/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wchj/error.hpp"

namespace wchj {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Config, "config " + where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

long get_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(where, "expected an integer");
  return j.get<long>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

std::vector<double> get_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(get_number(j[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

Point get_point(const json& j, const std::string& where) {
  const auto v = get_numbers(j, where);
  if (v.empty() || v.size() > 2) fail(where, "expected 1 or 2 coordinates");
  return {v[0], v.size() > 1 ? v[1] : 0.0};
}

Matrix get_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t d = j.size();
  if (d > static_cast<std::size_t>(kMaxCouplingDim)) fail(where, "more than 64 rows");
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = get_numbers(j[i], where + "[" + std::to_string(i) + "]");
    if (row.size() != d) fail(where, "matrix is not square");
    for (std::size_t k = 0; k < d; ++k) m(i, k) = row[k];
  }
  return m;
}

void parse_grid(const json& j, Scenario& s) {
  only_keys(j, "grid", {"kind", "dim", "m", "radius", "spacing", "margin"});
  const std::string kind = j.contains("kind") ? get_string(j["kind"], "grid.kind") : "torus";
  const int dim = j.contains("dim") ? static_cast<int>(get_integer(j["dim"], "grid.dim")) : 1;
  try {
    if (kind == "torus") {
      for (const char* k : {"radius", "spacing", "margin"}) {
        if (j.contains(k)) fail("grid", std::string("'") + k + "' applies to bounded grids only");
      }
      if (!j.contains("m")) fail("grid", "torus grids need 'm'");
      s.grid = Grid::torus(dim, static_cast<int>(get_integer(j["m"], "grid.m")));
    } else if (kind == "bounded") {
      if (j.contains("m")) fail("grid", "'m' applies to torus grids only");
      for (const char* k : {"radius", "spacing", "margin"}) {
        if (!j.contains(k)) fail("grid", std::string("bounded grids need '") + k + "'");
      }
      s.grid = Grid::bounded(dim, get_number(j["radius"], "grid.radius"),
                             get_number(j["spacing"], "grid.spacing"),
                             get_number(j["margin"], "grid.margin"));
    } else {
      fail("grid.kind", "expected 'torus' or 'bounded'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail("grid", e.what());
  }
}

void parse_initial(const json& j, Scenario& s) {
  only_keys(j, "initial", {"family", "p", "amplitude", "constant", "seed"});
  if (j.contains("family")) s.initial.family = get_string(j["family"], "initial.family");
  if (j.contains("p")) s.initial.p = get_point(j["p"], "initial.p");
  if (j.contains("amplitude")) s.initial.amplitude = get_number(j["amplitude"], "initial.amplitude");
  if (j.contains("constant")) s.initial.constant = get_number(j["constant"], "initial.constant");
  if (j.contains("seed")) s.initial.seed = static_cast<std::uint64_t>(get_integer(j["seed"], "initial.seed"));
  initial_sampler(s.initial, 1, 1);  // rejects unknown families
}

void parse_scheme(const json& j, SchemeConfig& c) {
  only_keys(j, "scheme",
            {"operator", "quadrature", "window_multiplier", "refinement", "refinement_depth",
             "subgrid_factor", "search", "t_max", "n_max", "velocity_bound", "tolerance_factor",
             "fail_on_boundary_touch"});
  if (j.contains("operator")) c.op = parse_operator(get_string(j["operator"], "scheme.operator"));
  if (j.contains("quadrature")) {
    c.quadrature = parse_quadrature(get_string(j["quadrature"], "scheme.quadrature"));
  }
  if (j.contains("window_multiplier")) {
    c.window_multiplier = get_number(j["window_multiplier"], "scheme.window_multiplier");
  }
  if (j.contains("refinement")) {
    c.refinement = parse_refinement(get_string(j["refinement"], "scheme.refinement"));
  }
  if (j.contains("refinement_depth")) {
    c.refinement_depth = static_cast<int>(get_integer(j["refinement_depth"], "scheme.refinement_depth"));
  }
  if (j.contains("subgrid_factor")) {
    c.subgrid_factor = static_cast<int>(get_integer(j["subgrid_factor"], "scheme.subgrid_factor"));
  }
  if (j.contains("search")) c.search = parse_search(get_string(j["search"], "scheme.search"));
  if (j.contains("t_max")) c.t_max = get_number(j["t_max"], "scheme.t_max");
  if (j.contains("n_max")) c.n_max = static_cast<int>(get_integer(j["n_max"], "scheme.n_max"));
  if (j.contains("velocity_bound")) {
    if (j["velocity_bound"].is_null()) {
      c.velocity_bound.reset();
    } else {
      c.velocity_bound = get_number(j["velocity_bound"], "scheme.velocity_bound");
    }
  }
  if (j.contains("tolerance_factor")) {
    c.tolerance_factor = get_number(j["tolerance_factor"], "scheme.tolerance_factor");
  }
  if (j.contains("fail_on_boundary_touch")) {
    c.fail_on_boundary_touch = get_bool(j["fail_on_boundary_touch"], "scheme.fail_on_boundary_touch");
  }
  c.validate();
}

void parse_system(const json& j, RunConfig& cfg) {
  only_keys(j, "system", {"components", "coupling", "label"});
  Scenario& s = cfg.scenario;
  const int dim = s.grid.dim();
  std::vector<LagrangianSpec> comps = s.sys.components;
  if (j.contains("components")) {
    const json& c = j["components"];
    if (!c.is_array() || c.empty()) fail("system.components", "expected a non-empty array");
    comps.clear();
    for (std::size_t k = 0; k < c.size(); ++k) {
      const std::string where = "system.components[" + std::to_string(k) + "]";
      only_keys(c[k], where, {"entry", "amplitude", "frequency", "sigma"});
      if (!c[k].contains("entry")) fail(where, "missing 'entry'");
      const std::string name = get_string(c[k]["entry"], where + ".entry");
      const double amp = c[k].contains("amplitude") ? get_number(c[k]["amplitude"], where) : 1.0;
      const int freq =
          c[k].contains("frequency") ? static_cast<int>(get_integer(c[k]["frequency"], where)) : 1;
      std::array<double, 4> sigma{1, 0, 0, 1};
      if (c[k].contains("sigma")) {
        const auto v = get_numbers(c[k]["sigma"], where + ".sigma");
        if (v.size() == 1) {
          sigma = {v[0], 0, 0, v[0]};
        } else if (v.size() == 4) {
          std::copy(v.begin(), v.end(), sigma.begin());
        } else {
          fail(where + ".sigma", "expected 1 or 4 entries");
        }
      }
      try {
        comps.push_back(make_entry(name, dim, amp, freq, sigma));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        fail(where, e.what());
      }
    }
  } else {
    // Rebuild the scenario's default entries at the configured dimension.
    for (auto& c : comps) {
      if (c.dim != dim) fail("system", "grid dimension changed; list the components explicitly");
    }
  }

  std::variant<CouplingMatrix, CouplingField> coupling = s.sys.coupling;
  if (j.contains("coupling")) {
    const json& c = j["coupling"];
    only_keys(c, "system.coupling", {"matrix", "zero", "oscillation"});
    Matrix raw;
    if (c.contains("matrix")) {
      raw = get_matrix(c["matrix"], "system.coupling.matrix");
    } else if (c.contains("zero")) {
      raw = Matrix::Zero(static_cast<int>(comps.size()), static_cast<int>(comps.size()));
      if (!get_bool(c["zero"], "system.coupling.zero")) fail("system.coupling.zero", "must be true");
    } else {
      fail("system.coupling", "expected 'matrix' or 'zero'");
    }
    cfg.coupling_raw = raw;
    try {
      const CouplingMatrix b = CouplingMatrix::validate(raw, "config");
      if (c.contains("oscillation")) {
        const json& o = c["oscillation"];
        only_keys(o, "system.coupling.oscillation", {"offset", "amplitude"});
        const double off = o.contains("offset") ? get_number(o["offset"], "oscillation.offset") : 1.0;
        const double amp =
            o.contains("amplitude") ? get_number(o["amplitude"], "oscillation.amplitude") : 0.5;
        coupling = CouplingField::scaled(b, off, amp, dim);
      } else {
        coupling = b;
      }
    } catch (const CouplingError& e) {
      cfg.coupling_error = e.what();
      return;
    }
  }
  SystemSpec sys{comps, coupling, j.contains("label") ? get_string(j["label"], "system.label") : "config"};
  try {
    sys.validate();
  } catch (const Error& e) {
    fail("system", e.what());
  }
  s.sys = std::move(sys);
}

void parse_run(const json& j, RunConfig& cfg) {
  only_keys(j, "run",
            {"T", "n", "partition", "n_min", "n_max", "seed", "times", "reference_factor", "cfl",
             "random_fields", "random_m", "random_t"});
  RunSettings& r = cfg.run;
  if (j.contains("T")) {
    r.T = get_number(j["T"], "run.T");
    if (!(*r.T >= 0.0)) fail("run.T", "must be >= 0");
  }
  if (j.contains("n")) r.n = static_cast<int>(get_integer(j["n"], "run.n"));
  if (j.contains("partition")) r.partition = get_numbers(j["partition"], "run.partition");
  if (j.contains("n_min")) r.n_min = static_cast<int>(get_integer(j["n_min"], "run.n_min"));
  if (j.contains("n_max")) r.n_max = static_cast<int>(get_integer(j["n_max"], "run.n_max"));
  if (j.contains("seed")) r.seed = static_cast<std::uint64_t>(get_integer(j["seed"], "run.seed"));
  if (j.contains("times")) r.times = get_numbers(j["times"], "run.times");
  if (j.contains("reference_factor")) {
    cfg.scenario.reference_factor =
        static_cast<int>(get_integer(j["reference_factor"], "run.reference_factor"));
  }
  if (j.contains("cfl")) cfg.scenario.cfl = get_number(j["cfl"], "run.cfl");
  if (j.contains("random_fields")) {
    r.random_fields = static_cast<int>(get_integer(j["random_fields"], "run.random_fields"));
  }
  if (j.contains("random_m")) r.random_m = static_cast<int>(get_integer(j["random_m"], "run.random_m"));
  if (j.contains("random_t")) r.random_t = get_number(j["random_t"], "run.random_t");
  if (r.n < 0 || r.n > 30) fail("run.n", "out of range [0, 30]");
  if (r.n_min < 0 || r.n_max < r.n_min || r.n_max > 30) fail("run", "need 0 <= n_min <= n_max <= 30");
  if (cfg.scenario.reference_factor < 1 || cfg.scenario.reference_factor > 64) {
    fail("run.reference_factor", "out of range [1, 64]");
  }
  if (r.random_fields < 0 || r.random_m < 4) fail("run", "random field settings out of range");
  for (double t : r.partition) {
    if (!(t > 0.0)) fail("run.partition", "steps must be > 0");
  }
}

void parse_output(const json& j, OutputSettings& o) {
  only_keys(j, "output", {"dir", "timings"});
  if (j.contains("dir")) o.dir = get_string(j["dir"], "output.dir");
  if (j.contains("timings")) o.timings = get_bool(j["timings"], "output.timings");
}

}  // namespace

LagrangianSpec make_entry(const std::string& name, int dim, double amplitude, int frequency,
                          const std::array<double, 4>& sigma) {
  if (name == "quadratic") return catalog::quadratic(dim);
  if (name == "quadratic-potential") return catalog::quadratic_potential(dim, amplitude, frequency);
  if (name == "anisotropic") return catalog::anisotropic(dim, sigma);
  if (name == "lipschitz-convex") return catalog::lipschitz_convex(dim);
  throw Error(ErrorCode::Config, "unknown catalog entry '" + name + "'");
}

OperatorKind parse_operator(const std::string& s) {
  if (s == "twisted") return OperatorKind::Twisted;
  if (s == "exp-at-endpoint") return OperatorKind::ExpAtEndpoint;
  if (s == "linearized") return OperatorKind::Linearized;
  throw Error(ErrorCode::Config, "unknown operator '" + s + "'");
}

Quadrature parse_quadrature(const std::string& s) {
  if (s == "right-endpoint") return Quadrature::RightEndpoint;
  if (s == "trapezoid") return Quadrature::Trapezoid;
  if (s == "midpoint") return Quadrature::Midpoint;
  throw Error(ErrorCode::Config, "unknown quadrature '" + s + "'");
}

Refinement parse_refinement(const std::string& s) {
  if (s == "none") return Refinement::None;
  if (s == "golden") return Refinement::Golden;
  if (s == "subgrid") return Refinement::SubGrid;
  throw Error(ErrorCode::Config, "unknown refinement '" + s + "'");
}

Search parse_search(const std::string& s) {
  if (s == "window") return Search::Window;
  if (s == "exhaustive") return Search::Exhaustive;
  throw Error(ErrorCode::Config, "unknown search '" + s + "'");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, source + ": " + e.what());
  }
  only_keys(j, "root", {"scenario", "system", "grid", "initial", "scheme", "run", "output"});
  RunConfig cfg;
  cfg.scenario = make_scenario(j.contains("scenario") ? get_string(j["scenario"], "scenario")
                                                       : std::string("appendix-torus"));
  cfg.source = source;
  Scenario& s = cfg.scenario;
  if (j.contains("grid")) parse_grid(j["grid"], s);
  if (j.contains("system")) {
    parse_system(j["system"], cfg);
    s.exact = nullptr;
  } else if (s.sys.space_dim() != s.grid.dim()) {
    fail("grid", "dimension differs from the scenario system; add a system block");
  }
  if (j.contains("initial")) {
    parse_initial(j["initial"], s);
    s.exact = nullptr;
  }
  if (j.contains("scheme")) parse_scheme(j["scheme"], s.scheme);
  if (j.contains("run")) parse_run(j["run"], cfg);
  if (j.contains("output")) parse_output(j["output"], cfg.output);
  if (cfg.run.T) s.T = *cfg.run.T;
  if (s.sys.coupling_is_zero() == false && !s.sys.constant_coupling() &&
      s.scheme.op == OperatorKind::Twisted) {
    fail("scheme.operator", "the twisted operator needs a constant coupling matrix");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace wchj

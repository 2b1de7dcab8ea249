#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wchj/cli.hpp"
#include "wchj/config.hpp"
#include "wchj/error.hpp"

using namespace wchj;

namespace {

ErrorCode parse_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("wchj_unit_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string write_config(const std::string& name, const std::string& body) {
  const auto dir = scratch(name);
  std::filesystem::create_directories(dir);
  const auto path = dir / "config.json";
  std::ofstream(path) << body;
  return path.string();
}

}  // namespace

TEST_CASE("defaults come from the named scenario") {
  const RunConfig c = parse_config(R"({"scenario": "appendix-affine"})");
  CHECK(c.scenario.name == "appendix-affine");
  CHECK(c.final_time() == c.scenario.T);
  CHECK(c.run.seed == 42);
  CHECK_FALSE(c.coupling_raw);
  const RunConfig t = parse_config(R"({"run": {"T": 0.3, "n": 2}})");
  CHECK(t.scenario.name == "appendix-torus");
  CHECK(t.final_time() == 0.3);
}

TEST_CASE("blocks override the scenario") {
  const RunConfig c = parse_config(R"({
    // comments are allowed
    "grid": {"kind": "torus", "dim": 1, "m": 32},
    "system": {"components": [{"entry": "quadratic"}, {"entry": "anisotropic", "sigma": [2]}],
               "coupling": {"matrix": [[1, -1], [0, 0.5]]}},
    "scheme": {"operator": "exp-at-endpoint", "quadrature": "midpoint", "refinement": "subgrid",
               "search": "exhaustive", "velocity_bound": 3.0},
    "initial": {"family": "random", "seed": 5},
    "run": {"partition": [0.1, 0.2], "times": [0.1], "cfl": 0.5},
    "output": {"dir": "x", "timings": true}
  })");
  CHECK(c.scenario.grid.nodes_per_axis() == 32);
  CHECK(c.scenario.sys.d() == 2);
  CHECK(c.scenario.sys.matrix()(1, 1) == 0.5);
  CHECK(c.scenario.scheme.op == OperatorKind::ExpAtEndpoint);
  CHECK(c.scenario.scheme.quadrature == Quadrature::Midpoint);
  CHECK(c.scenario.scheme.refinement == Refinement::SubGrid);
  CHECK(c.scenario.scheme.search == Search::Exhaustive);
  CHECK(*c.scenario.scheme.velocity_bound == 3.0);
  CHECK(c.scenario.initial.family == "random");
  CHECK(c.run.partition.size() == 2);
  CHECK(c.scenario.cfl == 0.5);
  CHECK(c.output.timings);
  CHECK(c.coupling_raw);
}

TEST_CASE("unknown keys, bad types and bad values are config errors") {
  for (const char* text : {
           R"({"bogus": 1})",
           R"({"grid": {"kind": "torus", "m": 32, "size": 3}})",
           R"({"system": {"components": [{"entry": "quadratic", "mass": 2}]}})",
           R"({"scheme": {"operator": "twisted", "speed": 1}})",
           R"({"run": {"T": 1, "steps": 3}})",
           R"({"output": {"file": "a"}})",
           R"({"initial": {"family": "sine", "phase": 0}})",
           R"({"scenario": "nope"})",
           R"({"grid": {"kind": "torus", "m": "many"}})",
           R"({"grid": {"kind": "torus", "m": 2}})",
           R"({"grid": {"kind": "bounded", "radius": 1, "spacing": 0.3, "margin": 0.1}})",
           R"({"scheme": {"quadrature": "simpson"}})",
           R"({"run": {"n": -1}})",
           R"({"run": {"partition": [0.1, 0]}})",
           R"({"initial": {"family": "wavelet"}})",
           R"({"system": {"components": [{"entry": "cubic"}]}})",
           R"({"system": {"coupling": {"matrix": [[1, -1]]}}})",
           R"([1, 2])",
           R"({"run": )",
       }) {
    CAPTURE(text);
    CHECK(parse_code(text) == ErrorCode::Config);
  }
}

TEST_CASE("invalid couplings are kept for check-coupling") {
  const RunConfig c = parse_config(R"({"system": {"coupling": {"matrix": [[1, 0.5], [-1, 1]]}}})");
  CHECK_FALSE(c.coupling_error.empty());
  REQUIRE(c.coupling_raw);
  std::ostringstream out, err;
  CHECK(cmd_check_coupling(c, {}, out) == kExitCheckFailure);
  CHECK(out.str().find("SignViolation at (1,2)") != std::string::npos);

  const std::string path = write_config("bad", R"({"system": {"coupling": {"matrix": [[1, 0.5], [-1, 1]]}}})");
  std::ostringstream o2, e2;
  CHECK(run_command("converge", path, {}, o2, e2) == kExitUsage);
  CHECK(e2.str().find("error:") == 0);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(Error(ErrorCode::Config, "x")) == kExitUsage);
  CHECK(exit_code_for(Error(ErrorCode::BlowUp, "x")) == kExitNumeric);
  CHECK(exit_code_for(Error(ErrorCode::NonFinite, "x")) == kExitNumeric);
  CHECK(exit_code_for(Error(ErrorCode::WindowBoundaryTouched, "x")) == kExitCheckFailure);
  CHECK(exit_code_for(std::runtime_error("x")) == kExitUsage);

  std::ostringstream out, err;
  CHECK(run_command("check-coupling", std::nullopt, {}, out, err) == kExitPass);
  CHECK(out.str().find("verdict: pass") != std::string::npos);
  CHECK(run_command("frobnicate", std::nullopt, {}, out, err) == kExitUsage);
  CHECK(run_command("iterate", std::string("/nonexistent/config.json"), {}, out, err) == kExitUsage);
}

TEST_CASE("iterate with n = 0 prints the one-step field") {
  const std::string path = write_config("iter", R"({"scenario": "zero", "run": {"n": 0}})");
  std::ostringstream out, err;
  CHECK(run_command("iterate", path, {}, out, err) == kExitPass);
  const std::string csv = out.str();
  CHECK(csv.rfind("x,u1,u2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 65);
  CHECK(csv.find("\n0,0,0\n") != std::string::npos);
}

TEST_CASE("converge writes json and csv and maps the verdict") {
  const auto dir = scratch("conv");
  const std::string path = write_config("conv_cfg", R"({"scenario": "zero", "run": {"n_max": 2}})");
  CliOptions opt;
  opt.out_dir = dir.string();
  std::ostringstream out, err;
  CHECK(run_command("converge", path, opt, out, err) == kExitPass);
  CHECK(out.str().find("semigroup (flat) convergence") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "converge.json"));
  CHECK(std::filesystem::exists(dir / "converge.csv"));

  // An exact scheme with B != 0 is inconclusive: exit 0, or 1 under --strict.
  const std::string exact = write_config("exact_cfg", R"({"scenario": "zero", "run": {"n_max": 1},
      "system": {"coupling": {"matrix": [[1, -1], [-1, 1]]}}})");
  CHECK(run_command("converge", exact, {}, out, err) == kExitPass);
  CliOptions strict;
  strict.strict = true;
  CHECK(run_command("converge", exact, strict, out, err) == kExitCheckFailure);
}

TEST_CASE("properties output is byte-identical across runs with seed 42") {
  const std::string path = write_config("prop_cfg", R"({"scenario": "zero",
      "run": {"random_fields": 4, "random_m": 16}})");
  std::string json[2], csv[2];
  for (int k = 0; k < 2; ++k) {
    const auto dir = scratch("prop" + std::to_string(k));
    CliOptions opt;
    opt.out_dir = dir.string();
    opt.seed = 42;
    opt.threads = k == 0 ? 1u : 4u;
    std::ostringstream out, err;
    CHECK(run_command("properties", path, opt, out, err) == kExitPass);
    json[k] = slurp(dir / "properties.json");
    csv[k] = slurp(dir / "properties.csv");
  }
  CHECK_FALSE(json[0].empty());
  CHECK(json[0] == json[1]);
  CHECK(csv[0] == csv[1]);
  CHECK(json[0].find("\"seed\": 42") != std::string::npos);
}

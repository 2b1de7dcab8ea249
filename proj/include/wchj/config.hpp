#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wchj/scenarios.hpp"

namespace wchj {

struct RunSettings {
  /// Final time; defaults to the scenario's T.
  std::optional<double> T;
  /// iterate: dyadic level, or an explicit partition of [0, T].
  int n = 0;
  std::vector<double> partition;
  int n_min = 0;
  int n_max = 6;
  std::uint64_t seed = 42;
  /// appendix: sample times; reference: snapshot times.
  std::vector<double> times;
  int random_fields = 50;
  int random_m = 32;
  double random_t = 0.25;
};

struct OutputSettings {
  /// Directory for CSV/JSON files; empty writes nothing but stdout.
  std::string dir;
  /// Per-row and reference timings in reports (not byte-reproducible).
  bool timings = false;
};

struct RunConfig {
  Scenario scenario;
  RunSettings run;
  OutputSettings output;
  /// The coupling block as written, before validation.
  std::optional<Matrix> coupling_raw;
  /// Validation message when coupling_raw is not a coupling matrix; the
  /// scenario then keeps its previous system.
  std::string coupling_error;
  std::string source;

  double final_time() const { return run.T ? *run.T : scenario.T; }
};

/// Parses the JSON run configuration (grammar in configs/README.md).
/// Unknown keys, wrong types and invalid values throw Error(Config).
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");
RunConfig load_config(const std::string& path);

/// Catalog entry by name with optional parameters, at space dimension dim.
LagrangianSpec make_entry(const std::string& name, int dim, double amplitude = 1.0,
                          int frequency = 1, const std::array<double, 4>& sigma = {1, 0, 0, 1});

OperatorKind parse_operator(const std::string& s);
Quadrature parse_quadrature(const std::string& s);
Refinement parse_refinement(const std::string& s);
Search parse_search(const std::string& s);

}  // namespace wchj

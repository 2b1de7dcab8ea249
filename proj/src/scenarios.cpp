#include "wchj/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wchj/error.hpp"
#include "wchj/reference.hpp"

namespace wchj {

GridField::Sampler initial_sampler(const InitialDatum& datum, int d, int dim) {
  const Point p = datum.p;
  const double a = datum.amplitude;
  const double c = datum.constant;
  const std::string& f = datum.family;
  if (f == "zero") return [](const Point&, int) { return 0.0; };
  if (f == "constant") return [c](const Point&, int) { return c; };
  if (f == "affine") return [p, dim](const Point& x, int) { return dot(p, x, dim); };
  if (f == "appendix-affine") {
    return [p, dim](const Point& x, int comp) { return comp == 0 ? 0.0 : dot(p, x, dim); };
  }
  if (f == "appendix-sine") {
    return [a](const Point& x, int comp) {
      return comp == 0 ? 0.0 : a * std::sin(2.0 * kPi * x[0]);
    };
  }
  if (f == "sine") {
    return [a, d, dim](const Point& x, int comp) {
      double v = std::sin(2.0 * kPi * (x[0] + static_cast<double>(comp) / d));
      if (dim == 2) v += std::cos(2.0 * kPi * x[1]);
      return a * v;
    };
  }
  if (f == "cusp") {
    return [a](const Point& x, int comp) {
      if (comp == 0) return 0.0;
      double s = x[0] - std::floor(x[0]);
      return a * std::sqrt(std::abs(s - 0.5));
    };
  }
  if (f == "random") {
    // Three modes per component and axis, amplitudes scale / k.
    std::mt19937_64 rng(datum.seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    struct Mode {
      double a, phi;
      int k, axis;
    };
    std::vector<std::vector<Mode>> modes(d);
    for (int comp = 0; comp < d; ++comp) {
      for (int axis = 0; axis < dim; ++axis) {
        for (int k = 1; k <= 3; ++k) {
          const double m = a * amp(rng) / k;
          modes[comp].push_back({m, phase(rng), k, axis});
        }
      }
    }
    return [modes](const Point& x, int comp) {
      double v = 0.0;
      for (const Mode& m : modes[comp]) v += m.a * std::sin(2.0 * kPi * m.k * x[m.axis] + m.phi);
      return v;
    };
  }
  throw Error(ErrorCode::Config, "unknown initial datum family '" + f + "'");
}

std::optional<AnalyticField> analytic_initial(const InitialDatum& datum, int d, int dim) {
  static const std::vector<std::string> smooth = {"zero", "constant", "affine", "appendix-affine",
                                                  "appendix-sine", "sine"};
  if (std::find(smooth.begin(), smooth.end(), datum.family) == smooth.end()) return std::nullopt;
  AnalyticField f;
  f.d = d;
  f.value = initial_sampler(datum, d, dim);
  const Point p = datum.p;
  const double a = datum.amplitude;
  const std::string family = datum.family;
  f.gradient = [=](const Point& x, int comp) -> Point {
    const double w = 2.0 * kPi;
    if (family == "affine") return dim == 2 ? p : Point{p[0], 0.0};
    if (family == "appendix-affine") {
      if (comp == 0) return {0.0, 0.0};
      return dim == 2 ? p : Point{p[0], 0.0};
    }
    if (family == "appendix-sine") {
      return comp == 0 ? Point{0.0, 0.0} : Point{a * w * std::cos(w * x[0]), 0.0};
    }
    if (family == "sine") {
      Point g{a * w * std::cos(w * (x[0] + static_cast<double>(comp) / d)), 0.0};
      if (dim == 2) g[1] = -a * w * std::sin(w * x[1]);
      return g;
    }
    return {0.0, 0.0};
  };
  return f;
}

GridField make_initial(const InitialDatum& datum, const Grid& grid, int d) {
  GridField f = GridField::sample(grid, d, initial_sampler(datum, d, grid.dim()),
                                  "initial datum " + datum.family);
  return grid.periodic() ? f : f.with_linear_extrapolation();
}

GridField random_lipschitz_field(const Grid& grid, int d, std::uint64_t seed, double scale) {
  InitialDatum datum;
  datum.family = "random";
  datum.seed = seed;
  datum.amplitude = scale;
  return make_initial(datum, grid, d);
}

CouplingMatrix random_coupling(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> off(0.0, 1.0);
  std::uniform_real_distribution<double> slack(0.0, 0.5);
  Matrix b = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      b(i, j) = -off(rng);
      s -= b(i, j);
    }
    b(i, i) = s + slack(rng);
  }
  return CouplingMatrix::validate(b, "random seed " + std::to_string(seed));
}

SystemSpec appendix_system(int dim) {
  Matrix b(2, 2);
  b << 1.0, -1.0, -1.0, 1.0;
  return SystemSpec{{catalog::quadratic(dim), catalog::quadratic(dim)},
                    CouplingMatrix::validate(b, "appendix"), "appendix"};
}

namespace {

Scenario appendix_torus() {
  Scenario s;
  s.name = "appendix-torus";
  s.description = "appendix system on T^1, u0 = (0, sin 2 pi x)";
  s.sys = appendix_system(1);
  s.grid = Grid::torus(1, 512);
  s.T = 1.0;
  s.scheme.t_max = 1.0;
  return s;
}

Scenario appendix_affine() {
  Scenario s;
  s.name = "appendix-affine";
  s.description = "appendix system on [-2, 2], u0 = (0, x), linear extrapolation outside";
  s.sys = appendix_system(1);
  s.grid = Grid::bounded(1, 2.0, 1e-3, 1.0);
  s.initial.family = "appendix-affine";
  s.T = 0.5;
  s.scheme.t_max = 2.0;
  return s;
}

Scenario appendix_witness() {
  Scenario s = appendix_affine();
  s.name = "appendix-witness";
  s.description = "appendix affine data with p = 30 on [-0.05, 0.05]; W(1) vs W(1/2)^2";
  s.grid = Grid::bounded(1, 0.05, 1e-3, 0.01);
  s.initial.p = {30.0, 0.0};
  s.T = 1.0;
  s.scheme.t_max = 1.0;
  return s;
}

Scenario uncoupled_affine() {
  Scenario s;
  s.name = "uncoupled-affine";
  s.description = "d = 1, B = 0, L = v^2/2, u0 = x on [-2, 2]";
  s.sys = SystemSpec{{catalog::quadratic(1)}, CouplingMatrix::zero(1), "uncoupled"};
  s.grid = Grid::bounded(1, 2.0, 1.0 / 256.0, 1.0);
  s.initial.family = "affine";
  s.T = 0.25;
  const Point p = s.initial.p;
  s.exact = [p](const Point& x, double t, int) {
    return hopf_lax_affine(p, 0.5 * dot(p, p, 1), t, x, 1);
  };
  return s;
}

Scenario uncoupled_torus() {
  Scenario s;
  s.name = "uncoupled-torus";
  s.description = "d = 2, B = 0, L = v^2/2, shifted sines on T^1";
  s.sys = SystemSpec{{catalog::quadratic(1), catalog::quadratic(1)}, CouplingMatrix::zero(2),
                     "uncoupled"};
  s.grid = Grid::torus(1, 256);
  s.initial.family = "sine";
  s.T = 0.5;
  return s;
}

Scenario oscillating_coupling() {
  Scenario s;
  s.name = "oscillating-coupling";
  s.description = "B(x) = (1 + sin(2 pi x) / 2) [[1,-1],[-1,1]], u0 = (0, sin 2 pi x)";
  Matrix b(2, 2);
  b << 1.0, -1.0, -1.0, 1.0;
  s.sys = SystemSpec{{catalog::quadratic(1), catalog::quadratic(1)},
                     CouplingField::scaled(CouplingMatrix::validate(b), 1.0, 0.5, 1),
                     "oscillating"};
  s.grid = Grid::torus(1, 512);
  s.T = 1.0;
  s.scheme.op = OperatorKind::ExpAtEndpoint;
  s.scheme.t_max = 1.0;
  return s;
}

Scenario cusp() {
  Scenario s = appendix_torus();
  s.name = "cusp";
  s.description = "appendix system, u0 = (0, sqrt|x - 1/2|), continuous but not Lipschitz";
  s.initial.family = "cusp";
  return s;
}

Scenario zero() {
  Scenario s;
  s.name = "zero";
  s.description = "B = 0, L = v^2/2, u0 = 0";
  s.sys = SystemSpec{{catalog::quadratic(1), catalog::quadratic(1)}, CouplingMatrix::zero(2),
                     "zero"};
  s.grid = Grid::torus(1, 64);
  s.initial.family = "zero";
  s.T = 0.5;
  s.exact = [](const Point&, double, int) { return 0.0; };
  return s;
}

Scenario potential_2d() {
  Scenario s;
  s.name = "potential-2d";
  s.description = "N = 2, L = |v|^2/2 + cos potentials, appendix coupling";
  Matrix b(2, 2);
  b << 1.0, -1.0, -1.0, 1.0;
  s.sys = SystemSpec{{catalog::quadratic_potential(2, 0.25, 1), catalog::quadratic_potential(2, 0.25, 1)},
                     CouplingMatrix::validate(b, "appendix"), "potential-2d"};
  s.grid = Grid::torus(2, 32);
  s.initial.family = "sine";
  s.initial.amplitude = 0.5;
  s.T = 0.25;
  return s;
}

}  // namespace

Scenario make_scenario(const std::string& name) {
  if (name == "appendix-torus") return appendix_torus();
  if (name == "appendix-affine") return appendix_affine();
  if (name == "appendix-witness") return appendix_witness();
  if (name == "uncoupled-affine") return uncoupled_affine();
  if (name == "uncoupled-torus") return uncoupled_torus();
  if (name == "oscillating-coupling") return oscillating_coupling();
  if (name == "cusp") return cusp();
  if (name == "zero") return zero();
  if (name == "potential-2d") return potential_2d();
  throw Error(ErrorCode::Config, "unknown scenario '" + name + "'");
}

std::vector<std::string> scenario_names() {
  return {"appendix-torus", "appendix-affine",      "appendix-witness",
          "uncoupled-affine", "uncoupled-torus",    "oscillating-coupling",
          "cusp",             "zero",               "potential-2d"};
}

}  // namespace wchj

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wchj/grid.hpp"
#include "wchj/lagrangian.hpp"
#include "wchj/lax_oleinik.hpp"

namespace wchj {

/// Named initial-datum families.
///   zero, constant (c), affine (<p,x> in every component),
///   appendix-affine ((0, <p,x>)), appendix-sine ((0, a sin 2 pi x_1)),
///   sine (component c: a sin(2 pi (x_1 + c / d)) [+ cos 2 pi x_2]),
///   cusp ((0, a sqrt|x_1 - 1/2|)), random (seeded Fourier sum).
struct InitialDatum {
  std::string family = "appendix-sine";
  Point p{1.0, 0.0};
  double amplitude = 1.0;
  double constant = 0.0;
  std::uint64_t seed = 0;
};

/// Pointwise value of the datum; valid anywhere in R^N.
GridField::Sampler initial_sampler(const InitialDatum& datum, int d, int dim);
/// Value and gradient of the datum for the smooth families (zero,
/// constant, affine, appendix-affine, appendix-sine, sine).
std::optional<AnalyticField> analytic_initial(const InitialDatum& datum, int d, int dim);
/// The datum sampled on grid; bounded grids get linear extrapolation.
GridField make_initial(const InitialDatum& datum, const Grid& grid, int d);

/// Seeded periodic Lipschitz field: per component a sum of three Fourier
/// modes with amplitude scale / k.
GridField random_lipschitz_field(const Grid& grid, int d, std::uint64_t seed,
                                 double scale = 1.0);
/// Seeded valid coupling: off-diagonal -U(0, 1), row sums U(0, 0.5).
CouplingMatrix random_coupling(int d, std::uint64_t seed);

/// B = [[1,-1],[-1,1]] with L_1 = L_2 = |v|^2 / 2.
SystemSpec appendix_system(int dim = 1);

struct Scenario {
  std::string name;
  std::string description;
  SystemSpec sys = appendix_system(1);
  Grid grid = Grid::torus(1, 64);
  InitialDatum initial;
  double T = 1.0;
  SchemeConfig scheme;
  int reference_factor = 4;
  double cfl = 0.9;
  /// S(t)u0 in closed form when known.
  std::function<double(const Point& x, double t, int comp)> exact;

  GridField u0() const { return make_initial(initial, grid, sys.d()); }
  GridField u0_on(const Grid& g) const { return make_initial(initial, g, sys.d()); }
};

/// appendix-torus, appendix-affine, appendix-witness, uncoupled-affine,
/// uncoupled-torus, oscillating-coupling, cusp, zero, potential-2d.
Scenario make_scenario(const std::string& name);
std::vector<std::string> scenario_names();

}  // namespace wchj

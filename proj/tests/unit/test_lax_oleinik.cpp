#include <doctest.h>

#include <cstring>
#include <limits>
#include <numeric>

#include "wchj/error.hpp"
#include "wchj/lax_oleinik.hpp"
#include "wchj/scenarios.hpp"

using namespace wchj;

namespace {

SystemSpec random_system(int d, int dim, std::uint64_t seed) {
  std::vector<LagrangianSpec> comps;
  for (int i = 0; i < d; ++i) {
    comps.push_back(i % 2 ? catalog::quadratic_potential(dim, 0.25, 1) : catalog::quadratic(dim));
  }
  return {comps, random_coupling(d, seed), "random"};
}

// min over every lattice foot within one period of every lift, by foot_costs.
GridField brute_step(const GridField& u, double t, const SystemSpec& sys, const SchemeConfig& cfg) {
  const Grid& g = u.grid();
  const int d = u.d(), m = g.nodes_per_axis();
  std::vector<double> out(g.node_count() * d, std::numeric_limits<double>::infinity());
  std::vector<double> cost(d);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const auto i = g.index(n);
    const Point x = g.point(n);
    const long span1 = g.dim() == 2 ? m : 0;
    for (long k0 = i[0] - m; k0 <= i[0] + m; ++k0) {
      for (long k1 = i[1] - span1; k1 <= i[1] + span1; ++k1) {
        const Point y{g.coord(k0), g.dim() == 2 ? g.coord(k1) : 0.0};
        foot_costs(u, x, y, t, sys, cfg, cost);
        for (int c = 0; c < d; ++c) out[n * d + c] = std::min(out[n * d + c], cost[c]);
      }
    }
  }
  return u.with_values(std::move(out), "brute");
}

bool identical(const GridField& a, const GridField& b) {
  const auto va = a.values(), vb = b.values();
  return va.size() == vb.size() &&
         std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("window step equals the brute-force minimum over all feet") {
  for (int k = 0; k < 12; ++k) {
    CAPTURE(k);
    const int dim = k % 4 == 3 ? 2 : 1;
    const int d = 2 + k % 2;
    const SystemSpec sys = random_system(d, dim, 50 + k);
    const Grid g = Grid::torus(dim, dim == 2 ? 8 : 16);
    const GridField u = random_lipschitz_field(g, d, 70 + k, 0.5);
    SchemeConfig cfg;
    cfg.refinement = Refinement::None;
    cfg.quadrature = static_cast<Quadrature>(k % 3);
    cfg.op = k % 5 == 4 ? OperatorKind::ExpAtEndpoint : OperatorKind::Twisted;
    const double t = 0.1 + 0.05 * (k % 3);
    CHECK(identical(operator_step(u, t, sys, cfg).output, brute_step(u, t, sys, cfg)));
  }
}

TEST_CASE("refinement never raises the lattice value") {
  const SystemSpec sys = random_system(2, 1, 3);
  const GridField u = random_lipschitz_field(Grid::torus(1, 32), 2, 4);
  SchemeConfig none;
  none.refinement = Refinement::None;
  const GridField base = twisted_step(u, 0.2, sys, none).output;
  for (Refinement r : {Refinement::Golden, Refinement::SubGrid}) {
    SchemeConfig cfg = none;
    cfg.refinement = r;
    CHECK(max_excess(twisted_step(u, 0.2, sys, cfg).output, base) <= 0.0);
  }
}

TEST_CASE("constants are fixed when L(x, 0) = 0 and B has zero row sums") {
  const SystemSpec sys = appendix_system(1);
  const Grid g = Grid::torus(1, 32);
  const GridField c = GridField::sample(g, 2, [](const Point&, int) { return 0.7; });
  for (Quadrature q : {Quadrature::RightEndpoint, Quadrature::Trapezoid, Quadrature::Midpoint}) {
    SchemeConfig cfg;
    cfg.quadrature = q;
    CHECK(sup_diff(twisted_step(c, 0.3, sys, cfg).output, c) <= 1e-14);
  }
}

TEST_CASE("monotonicity and shift law on exact orderings") {
  const SystemSpec sys = random_system(3, 1, 8);
  const Grid g = Grid::torus(1, 32);
  const GridField u = random_lipschitz_field(g, 3, 9);
  std::vector<double> bumped(u.values().begin(), u.values().end());
  for (std::size_t k = 0; k < bumped.size(); k += 3) bumped[k] += 0.2;
  const GridField v = u.with_values(bumped, "bumped");
  SchemeConfig cfg;
  cfg.refinement = Refinement::None;
  const GridField wu = twisted_step(u, 0.25, sys, cfg).output;
  CHECK(max_excess(wu, twisted_step(v, 0.25, sys, cfg).output) <= 0.0);
  // Row sums in [0, 1/2] make W(t)(u + k) <= W(t)u + k for k >= 0.
  CHECK(max_excess(twisted_step(u.shifted(0.5), 0.25, sys, cfg).output, wu.shifted(0.5)) <= 1e-14);
}

TEST_CASE("dyadic iteration: n = 0 is one step, partitions compose") {
  const SystemSpec sys = appendix_system(1);
  const GridField u = random_lipschitz_field(Grid::torus(1, 32), 2, 1);
  SchemeConfig cfg;
  CHECK(identical(iterate_dyadic(u, 0.4, 0, sys, cfg), twisted_step(u, 0.4, sys, cfg).output));
  const double quarters[] = {0.1, 0.1, 0.1, 0.1};
  IterationLog log;
  const GridField a = iterate_dyadic(u, 0.4, 2, sys, cfg, &log);
  CHECK(log.steps == 4);
  CHECK(identical(a, iterate_partition(u, quarters, sys, cfg)));
  const double bad[] = {0.1, -0.1};
  CHECK_THROWS_AS(iterate_partition(u, bad, sys, cfg), Error);
}

TEST_CASE("wn_partition") {
  auto sum = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); };
  auto p = wn_partition(0.7, 1.0, 2);
  REQUIRE(p.size() == 3);
  CHECK(p[0] == 0.25);
  CHECK(p[1] == 0.25);
  CHECK(p[2] == doctest::Approx(0.2));
  CHECK(sum(p) == doctest::Approx(0.7));
  // Exact multiples keep a full last step.
  p = wn_partition(0.5, 1.0, 2);
  CHECK(p.size() == 2);
  CHECK(p.back() == doctest::Approx(0.25));
  CHECK(wn_partition(0.1, 1.0, 0).size() == 1);
  CHECK_THROWS_AS(wn_partition(0.0, 1.0, 2), Error);
}

TEST_CASE("step preconditions") {
  const SystemSpec sys = appendix_system(1);
  const GridField u = random_lipschitz_field(Grid::torus(1, 16), 2, 1);
  SchemeConfig cfg;
  auto code = [&](double t, OperatorKind op, const SystemSpec& s) {
    SchemeConfig c = cfg;
    c.op = op;
    c.t_max = 1.0;
    try {
      operator_step(u, t, s, c);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Config;
  };
  CHECK(code(0.6, OperatorKind::Linearized, sys) == ErrorCode::StepTooLarge);
  CHECK(code(0.6, OperatorKind::ExpAtEndpoint, sys) == ErrorCode::Config);
  CHECK(code(-0.1, OperatorKind::Twisted, sys) == ErrorCode::NegativeTime);
  CHECK(code(1.5, OperatorKind::Twisted, sys) == ErrorCode::InvalidArgument);

  SystemSpec field{sys.components, CouplingField::scaled(sys.matrix(), 1.0, 0.5), "field"};
  CHECK(code(0.2, OperatorKind::Twisted, field) == ErrorCode::InvalidArgument);
  CHECK(code(0.2, OperatorKind::ExpAtEndpoint, field) == ErrorCode::Config);

  const GridField wrong = random_lipschitz_field(Grid::torus(1, 16), 3, 1);
  CHECK_THROWS_AS(twisted_step(wrong, 0.2, sys, cfg), Error);
}

TEST_CASE("an undersized velocity bound is reported") {
  const SystemSpec sys = appendix_system(1);
  const GridField u = random_lipschitz_field(Grid::torus(1, 64), 2, 2, 2.0);
  SchemeConfig cfg;
  cfg.velocity_bound = 0.05;
  cfg.window_multiplier = 1.0;
  try {
    twisted_step(u, 0.5, sys, cfg);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WindowBoundaryTouched);
  }
  cfg.fail_on_boundary_touch = false;
  const StepResult r = twisted_step(u, 0.5, sys, cfg);
  CHECK(r.boundary_touched);
  CHECK(r.touch_count > 0);
}

TEST_CASE("B = 0: the three operators coincide") {
  SystemSpec sys{{catalog::quadratic(1), catalog::quadratic(1)}, CouplingMatrix::zero(2), "B=0"};
  const GridField u = random_lipschitz_field(Grid::torus(1, 32), 2, 3);
  SchemeConfig cfg;
  const GridField w = twisted_step(u, 0.3, sys, cfg).output;
  CHECK(sup_diff(w, alt_exp_step(u, 0.3, sys, cfg).output) <= 1e-14);
  CHECK(sup_diff(w, alt_lin_step(u, 0.3, sys, cfg).output) <= 1e-14);
}

TEST_CASE("affine data on the box follow Hopf-Lax") {
  const Scenario s = make_scenario("uncoupled-affine");
  const GridField u = s.u0();
  const GridField w = twisted_step(u, 0.25, s.sys, s.scheme).output;
  double worst = 0.0;
  for (std::size_t n = 0; n < s.grid.node_count(); ++n) {
    if (!s.grid.in_core(n)) continue;
    for (int c = 0; c < w.d(); ++c) {
      worst = std::max(worst, std::abs(w(n, c) - s.exact(s.grid.point(n), 0.25, c)));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("tolerance and window radius") {
  const Grid g = Grid::torus(1, 64);
  const GridField u = GridField::sample(g, 1, [](const Point&, int) { return 1.0; });
  SchemeConfig cfg;
  CHECK(tol_split(u, cfg) == doctest::Approx(10.0 / 64));
  SystemSpec sys{{catalog::quadratic(1)}, CouplingMatrix::zero(1), "one"};
  cfg.velocity_bound = 1.0;
  CHECK(window_radius(u, 0.4, sys, cfg) == doctest::Approx(0.6));
  CHECK(window_radius(u, 0.001, sys, cfg) == doctest::Approx(2.0 / 64));
}

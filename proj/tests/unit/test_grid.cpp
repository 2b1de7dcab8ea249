#include <doctest.h>

#include <sstream>

#include "wchj/error.hpp"
#include "wchj/grid.hpp"
#include "wchj/scenarios.hpp"

using namespace wchj;

TEST_CASE("grid construction") {
  const Grid t = Grid::torus(2, 16);
  CHECK(t.node_count() == 256);
  CHECK(t.spacing() == doctest::Approx(1.0 / 16));
  CHECK(t.in_core(5));
  CHECK_THROWS_AS(Grid::torus(3, 16), Error);
  CHECK_THROWS_AS(Grid::torus(1, 3), Error);

  const Grid b = Grid::bounded(1, 1.0, 0.25, 0.5);
  CHECK(b.nodes_per_axis() == 9);
  CHECK(b.point(0)[0] == doctest::Approx(-1.0));
  CHECK(b.point(8)[0] == doctest::Approx(1.0));
  CHECK_FALSE(b.in_core(0));
  CHECK(b.in_core(4));
  CHECK_THROWS_AS(Grid::bounded(1, 1.0, 0.3, 0.5), Error);
  CHECK_THROWS_AS(Grid::bounded(1, 1.0, 0.25, 1.0), Error);

  const Grid r = t.refined(2);
  CHECK(r.nodes_per_axis() == 32);
  CHECK(r != t);
  CHECK(Grid::torus(2, 16) == t);
}

TEST_CASE("flat and index round trip") {
  const Grid g = Grid::torus(2, 8);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const auto i = g.index(n);
    CHECK(g.flat(i[0], i[1]) == n);
  }
}

TEST_CASE("torus interpolation is exact at nodes and periodic") {
  const Grid g = Grid::torus(2, 8);
  const GridField f = random_lipschitz_field(g, 2, 9);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const Point x = g.point(n);
    const auto v = interpolate(f, x);
    CHECK(v[0] == f(n, 0));
    CHECK(v[1] == f(n, 1));
    const auto w = interpolate(f, {x[0] + 1.0, x[1] - 2.0});
    CHECK(w[0] == doctest::Approx(f(n, 0)).epsilon(1e-13));
  }
  // Midpoint of a cell is the average of its corners.
  const auto m = interpolate(f, {0.5 / 8, 0.5 / 8});
  const double avg =
      0.25 * (f(g.flat(0, 0), 0) + f(g.flat(1, 0), 0) + f(g.flat(0, 1), 0) + f(g.flat(1, 1), 0));
  CHECK(m[0] == doctest::Approx(avg).epsilon(1e-13));
}

TEST_CASE("box interpolation and extrapolation are exact on affine data") {
  const Grid g = Grid::bounded(2, 1.0, 0.25, 0.25);
  const GridField f =
      GridField::sample(g, 1, [](const Point& x, int) { return 0.5 + 2.0 * x[0] - 3.0 * x[1]; })
          .with_linear_extrapolation();
  for (Point x : {Point{0.13, -0.41}, Point{0.99, 0.99}, Point{-1.0, 0.3}}) {
    CHECK(interpolate(f, x)[0] == doctest::Approx(0.5 + 2.0 * x[0] - 3.0 * x[1]));
  }
  // Lifted nodes beyond the box follow the affine extension.
  CHECK(f.lifted(-2, 4, 0) == doctest::Approx(0.5 + 2.0 * g.coord(-2) - 3.0 * g.coord(4)));
  const GridField plain = GridField::sample(g, 1, [](const Point& x, int) { return x[0]; });
  try {
    plain.lifted(-1, 0, 0);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfDomain);
  }
}

TEST_CASE("field invariants") {
  const Grid g = Grid::torus(1, 8);
  CHECK_THROWS_AS(GridField(g, 2, std::vector<double>(15, 0.0)), Error);
  std::vector<double> v(16, 0.0);
  v[3] = std::nan("");
  try {
    GridField(g, 2, v);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
}

TEST_CASE("sup_diff, max_excess, shift and Lipschitz estimate") {
  const Grid g = Grid::torus(1, 16);
  const GridField f = GridField::sample(g, 2, [](const Point& x, int c) { return c + x[0]; });
  const GridField s = f.shifted(0.25);
  CHECK(sup_diff(f, s) == doctest::Approx(0.25));
  CHECK(max_excess(f, s) == doctest::Approx(-0.25));
  CHECK(max_excess(s, f) == doctest::Approx(0.25));
  CHECK(f.sup_norm() == doctest::Approx(1.0 + 15.0 / 16));
  // The wrap from x = 15/16 back to 0 is the steepest pair.
  CHECK(lipschitz_estimate(f) == doctest::Approx(15.0));

  const Grid b = Grid::bounded(1, 1.0, 0.25, 0.5);
  const GridField p = GridField::sample(b, 1, [](const Point& x, int) { return x[0]; });
  const GridField q = GridField::sample(b, 1, [](const Point& x, int) { return x[0] * (1 + x[0] * x[0]); });
  CHECK(sup_diff(p, q, Region::Core) == doctest::Approx(0.125));
  CHECK(sup_diff(p, q, Region::All) == doctest::Approx(1.0));
}

TEST_CASE("restrict_to injects fine nodes") {
  const Grid coarse = Grid::torus(2, 8);
  const Grid fine = coarse.refined(4);
  const GridField f = random_lipschitz_field(fine, 2, 4);
  const GridField r = restrict_to(f, coarse);
  for (std::size_t n = 0; n < coarse.node_count(); ++n) {
    const auto i = coarse.index(n);
    CHECK(r(n, 1) == f(fine.flat(4 * i[0], 4 * i[1]), 1));
  }
  const Grid box = Grid::bounded(1, 1.0, 0.25, 0.25);
  const GridField bf = GridField::sample(box.refined(2), 1, [](const Point& x, int) { return x[0]; });
  CHECK(restrict_to(bf, box)(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("csv round trip and number format") {
  const Grid g = Grid::torus(2, 8);
  const GridField f = random_lipschitz_field(g, 3, 12);
  std::stringstream ss;
  write_csv(f, ss);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  CHECK(header == "x1,x2,u1,u2,u3");
  const GridField back = read_csv(g, ss);
  CHECK(back.d() == 3);
  CHECK(sup_diff(f, back) <= 1e-11 * (1 + f.sup_norm()));

  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3) == "0.333333333333");
  CHECK(format_number(-2.5e-20) == "-2.5e-20");

  std::stringstream wrong("x,u1\n0,1\n");
  CHECK_THROWS_AS(read_csv(g, wrong), Error);
}

#include <doctest.h>

#include "wchj/analysis.hpp"
#include "wchj/error.hpp"

using namespace wchj;

TEST_CASE("verdict combination") {
  CHECK(combine(Verdict::Pass, Verdict::Pass) == Verdict::Pass);
  CHECK(combine(Verdict::Pass, Verdict::InconclusiveAtFloor) == Verdict::InconclusiveAtFloor);
  CHECK(combine(Verdict::InconclusiveAtFloor, Verdict::Fail) == Verdict::Fail);
  CHECK(combine(Verdict::Fail, Verdict::Pass) == Verdict::Fail);
}

TEST_CASE("residual of a stationary constant field vanishes") {
  const SystemSpec sys = appendix_system(1);
  const Grid g = Grid::torus(1, 32);
  const GridField c = GridField::sample(g, 2, [](const Point&, int) { return 0.8; });
  const std::vector<GridField> levels{c, c, c, c};
  const ResidualAudit a = residual_audit(levels, 0.1, 0.01, sys);
  CHECK(a.levels_used == 2);
  for (int i = 0; i < 2; ++i) CHECK(a.sup[i] <= 1e-10);

  const std::vector<GridField> two{c, c};
  try {
    residual_audit(two, 0.0, 0.01, sys);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientTimeLevels);
  }
}

TEST_CASE("residual of the exact affine solution on the box vanishes") {
  const Scenario s = make_scenario("uncoupled-affine");
  std::vector<GridField> levels;
  for (int k = 0; k < 3; ++k) {
    const double t = 0.1 + 0.01 * k;
    levels.push_back(GridField::sample(s.grid, 1, [&](const Point& x, int c) { return s.exact(x, t, c); }));
  }
  const ResidualAudit a = residual_audit(levels, 0.1, 0.01, s.sys);
  CHECK(a.sup[0] <= 1e-10);
}

TEST_CASE("sign structure of the residual of a decaying mode") {
  // u = e^{-t}(1, -1) with constant slope 0 leaves r = e^{-t}(1, -1).
  const SystemSpec sys = appendix_system(1);
  const Grid g = Grid::torus(1, 16);
  std::vector<GridField> levels;
  for (int k = 0; k < 3; ++k) {
    const double t = 0.5 + 0.001 * k;
    levels.push_back(GridField::sample(g, 2, [&](const Point&, int c) {
      return (c == 0 ? 1.0 : -1.0) * std::exp(-t);
    }));
  }
  const ResidualAudit a = residual_audit(levels, 0.5, 0.001, sys);
  CHECK(a.at_sup[0] == doctest::Approx(std::exp(-0.501)).epsilon(1e-5));
  CHECK(a.sign[0] == 1);
  CHECK(a.sign[1] == -1);
}

TEST_CASE("exponential audit") {
  for (int d = 1; d <= 6; ++d) {
    const ExpAudit a = audit_exponential(random_coupling(d, d));
    CHECK(a.passed());
    CHECK(a.taus == 26);
    CHECK(a.min_entry >= 0.0);
    CHECK(a.max_row_sum <= 1.0 + kMatrixTolerance);
  }
}

TEST_CASE("B = 0 gives the flat verdict") {
  const ConvergenceReport rep = run_convergence(make_scenario("zero"), 0, 3);
  CHECK(rep.verdict == Verdict::Pass);
  CHECK(rep.label == "semigroup (flat) convergence");
  CHECK(rep.rows.size() == 4);
}

TEST_CASE("an exact scheme is inconclusive at the floor") {
  Scenario s = make_scenario("zero");
  s.sys = appendix_system(1);
  const ConvergenceReport rep = run_convergence(s, 0, 2);
  CHECK(rep.verdict == Verdict::InconclusiveAtFloor);
  CHECK(rep.label == "inconclusive-at-floor");
}

TEST_CASE("closed-form reference carries no floor") {
  const Scenario s = make_scenario("uncoupled-affine");
  const ReferenceSolution r = compute_reference(s, s.T);
  CHECK(r.floor == 0.0);
  const ConvergenceReport rep = run_convergence(s, 0, 2);
  CHECK(rep.rows.front().error <= 1e-6);
}

TEST_CASE("convergence reports are deterministic") {
  const Scenario s = make_scenario("uncoupled-affine");
  const ConvergenceReport a = run_convergence(s, 0, 2);
  const ConvergenceReport b = run_convergence(s, 0, 2);
  CHECK(a.json() == b.json());
  CHECK(a.csv() == b.csv());
  CHECK(a.text() == b.text());
  CHECK(a.csv().rfind("n,error,subsolution_excess\n", 0) == 0);
}

TEST_CASE("property reports are reproducible and seed-dependent") {
  const Scenario s = make_scenario("zero");
  PropertyOptions opt;
  opt.random_fields = 4;
  opt.random_m = 16;
  const PropertyReport a = run_properties(s, 42, opt);
  const PropertyReport b = run_properties(s, 42, opt);
  CHECK(a.json() == b.json());
  CHECK(a.csv() == b.csv());
  CHECK(a.verdict() == Verdict::Pass);
  CHECK(a.find("random/monotonicity") != nullptr);
  CHECK(a.find("semigroup-B0") != nullptr);
  CHECK(a.find("no-such-check") == nullptr);
  for (const auto& c : a.checks) {
    CAPTURE(c.name);
    CHECK(c.verdict != Verdict::Fail);
  }
}

TEST_CASE("alternative operators differ by O(t^2)") {
  const Scenario s = make_scenario("oscillating-coupling");
  const double ts[] = {0.2, 0.1};
  const auto rows = alt_discrepancy(s, ts);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.discrepancy <= r.bound);
  CHECK(rows[1].per_time < rows[0].per_time);
}

TEST_CASE("appendix report: oracle rows and exponential rows") {
  const Scenario s = make_scenario("appendix-affine");
  const double ts[] = {0.5};
  const AppendixReport rep = run_appendix(s, ts);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.exponential.size() == 4);
  for (const auto& e : rep.exponential) CHECK(e.error <= 1e-10);
  CHECK(rep.rows[0].step_error <= 1e-4);
  CHECK(rep.rows[0].expected[0] == doctest::Approx(appendix_residual(0.5, s.initial.p)[0]));
  // Measured residual keeps one sign on both components.
  CHECK(rep.rows[0].rederived_sign_ok);
}

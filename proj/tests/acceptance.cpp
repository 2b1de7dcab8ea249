// Acceptance run: one PASS/FAIL line per criterion.
//
//   wchj_acceptance            all criteria
//   wchj_acceptance 4 9        selected criteria

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wchj/analysis.hpp"
#include "wchj/error.hpp"
#include "wchj/parallel.hpp"
#include "wchj/reference.hpp"

using namespace wchj;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) { return format_number(v); }

Outcome c1_exponential() {
  const auto t0 = std::chrono::steady_clock::now();
  Matrix raw(2, 2);
  raw << 1, -1, -1, 1;
  const CouplingMatrix b = CouplingMatrix::validate(raw);
  double worst = 0.0;
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    const double a = 0.5 * (1 + std::exp(-2 * t)), c = 0.5 * (1 - std::exp(-2 * t));
    Matrix closed(2, 2);
    closed << a, c, c, a;
    worst = std::max(worst, (exp_neg(b, t) - closed).cwiseAbs().maxCoeff());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-10 && secs < 1.0,
          "max entry error " + num(worst) + " (tol 1e-10), " + num(secs) + " s (limit 1 s)"};
}

Outcome c2_one_step() {
  const Scenario s = make_scenario("appendix-affine");
  const GridField w = twisted_step(s.u0(), 0.5, s.sys, s.scheme).output;
  std::array<double, 2> err{0, 0};
  for (std::size_t n = 0; n < s.grid.node_count(); ++n) {
    if (!s.grid.in_core(n)) continue;
    const auto ex = appendix_exact_W(0.5, s.grid.point(n), s.initial.p);
    for (int c = 0; c < 2; ++c) err[c] = std::max(err[c], std::abs(w(n, c) - ex[c]));
  }
  return {err[0] <= 1e-4 && err[1] <= 1e-4,
          "core sup error (" + num(err[0]) + ", " + num(err[1]) + ") at h=1e-3, t=0.5 (tol 1e-4)"};
}

Outcome c3_residual() {
  const Scenario s = make_scenario("appendix-affine");
  const double ts[] = {0.25, 0.5, 1.0};
  const AppendixReport rep = run_appendix(s, ts);
  std::ostringstream os;
  for (const auto& r : rep.rows) {
    os << "t=" << num(r.t) << " measured (" << num(r.measured[0]) << ", " << num(r.measured[1])
       << ") expected (" << num(r.expected[0]) << ", " << num(r.expected[1]) << ") rel ("
       << num(r.rel_error[0]) << ", " << num(r.rel_error[1]) << ") sign "
       << (r.sign_ok ? "ok" : "wrong") << "; ";
  }
  os << "tol 20% and sign (+,-)";
  return {rep.verdict == Verdict::Pass, os.str()};
}

Outcome c4_dyadic() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = make_scenario("appendix-torus");
  const ConvergenceReport rep = run_convergence(s, 0, 6);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << "e_n =";
  for (const auto& r : rep.rows) os << " " << num(r.error);
  os << "; max increase " << num(rep.max_increase) << " (tol_split " << num(rep.tol_split)
     << "); e_6 " << num(rep.rows.back().error) << " <= " << num(rep.bound) << " (floor "
     << num(rep.floor) << "); " << num(secs) << " s (limit 300 s)";
  return {rep.verdict == Verdict::Pass && rep.monotone && rep.bound_ok && secs < 300.0, os.str()};
}

Outcome c5_inequalities() {
  const Scenario s = make_scenario("appendix-witness");
  PropertyOptions opt;
  opt.random_fields = 50;
  const PropertyReport rep = run_properties(s, 42, opt);
  bool ok = true;
  std::ostringstream os;
  for (const char* name : {"random/monotonicity", "random/shift-law", "random/non-expansive",
                           "random/superadditivity", "random/dyadic-decrease",
                           "random/subsolution-bound"}) {
    const PropertyCheck* c = rep.find(name);
    if (!c) {
      ok = false;
      os << name << " missing; ";
      continue;
    }
    ok = ok && c->verdict == Verdict::Pass;
    os << name + 7 << " " << num(c->max_violation) << "/" << num(c->tolerance) << "; ";
  }
  ok = ok && rep.witness.found;
  if (rep.witness.found) {
    os << "witness " << rep.witness.scenario << " x=" << num(rep.witness.x[0]) << " gap "
       << num(rep.witness.gap) << " > 10 x " << num(rep.witness.tol_split);
  } else {
    os << "no superadditivity witness";
  }
  return {ok, os.str()};
}

Outcome c6_degenerate() {
  SystemSpec sys{{catalog::quadratic(1), catalog::quadratic(1)}, CouplingMatrix::zero(2), "B=0"};
  SchemeConfig cfg;
  const Grid g = Grid::torus(1, 128);
  const double t = 0.5;
  double worst_ratio = 0.0, worst_ops = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GridField u = random_lipschitz_field(g, 2, seed);
    const GridField one = twisted_step(u, t, sys, cfg).output;
    const double half[2] = {t / 2, t / 2};
    const GridField two = iterate_partition(u, half, sys, cfg);
    worst_ratio = std::max(worst_ratio, sup_diff(one, two) / tol_split(u, cfg));
    const GridField e = alt_exp_step(u, t, sys, cfg).output;
    const GridField l = alt_lin_step(u, t, sys, cfg).output;
    worst_ops = std::max({worst_ops, sup_diff(one, e), sup_diff(one, l)});
  }
  return {worst_ratio <= 1.0 && worst_ops <= 1e-10,
          "max sup_diff(W(t)u, W(t/2)^2 u) / tol_split " + num(worst_ratio) +
              " (<= 1); operator spread " + num(worst_ops) + " (tol 1e-10); 10 seeds"};
}

Outcome c7_consistency() {
  const Scenario s = make_scenario("appendix-torus");
  const double ts[] = {0.1, 0.05, 0.025, 0.0125};
  const ConsistencyReport rep = run_consistency(s, ts);
  std::ostringstream os;
  os << "residuals";
  for (const auto& r : rep.rows) os << " " << num(r.residual);
  os << "; spatial floor " << num(rep.spatial_floor) << ", target 5 x floor = "
     << num(5 * rep.spatial_floor) << "; monotone " << (rep.monotone ? "yes" : "no");
  return {rep.verdict == Verdict::Pass, os.str()};
}

Outcome c8_brute_force() {
  int mismatches = 0, runs = 0;
  std::size_t nodes = 0;
  for (int k = 0; k < 20; ++k) {
    const std::uint64_t seed = 1000 + k;
    const int d = 2 + (k % 2);
    const int dim = k % 5 == 4 ? 2 : 1;
    const int m = dim == 2 ? 8 + 8 * (k % 3) : (k % 3 == 0 ? 8 : k % 3 == 1 ? 16 : 32);
    std::vector<LagrangianSpec> comps;
    for (int i = 0; i < d; ++i) {
      comps.push_back(i == 1 ? catalog::quadratic_potential(dim, 0.25, 1) : catalog::quadratic(dim));
    }
    SystemSpec sys{comps, random_coupling(d, seed), "brute"};
    const Grid g = Grid::torus(dim, m);
    const GridField u = random_lipschitz_field(g, d, seed, 0.25);
    SchemeConfig cfg;
    cfg.quadrature = static_cast<Quadrature>(k % 3);
    cfg.refinement = static_cast<Refinement>((k / 3) % 3);
    cfg.t_max = 1.0;
    const double t = 0.05 + 0.03 * (k % 6);
    SchemeConfig full = cfg;
    full.search = Search::Exhaustive;
    const StepResult a = twisted_step(u, t, sys, cfg);
    const StepResult b = twisted_step(u, t, sys, full);
    ++runs;
    nodes += g.node_count();
    const auto va = a.output.values(), vb = b.output.values();
    if (va.size() != vb.size() || std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0) {
      ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(runs) + " seeded scenarios (" + std::to_string(nodes) +
                               " nodes, m <= 32, N in {1,2}, all quadratures and refinements), " +
                               std::to_string(mismatches) + " not bit-identical"};
}

Outcome c9_alternatives() {
  Scenario s = make_scenario("oscillating-coupling");
  std::ostringstream os;
  bool ok = true;
  for (OperatorKind op : {OperatorKind::ExpAtEndpoint, OperatorKind::Linearized}) {
    s.scheme.op = op;
    const ConvergenceReport rep = run_convergence(s, 0, 6);
    ok = ok && rep.verdict == Verdict::Pass;
    os << to_string(op) << " " << to_string(rep.verdict) << " (e " << num(rep.rows.front().error)
       << " -> " << num(rep.rows.back().error) << ", bound " << num(rep.bound) << "); ";
  }
  const double ts[] = {0.25, 0.125, 0.0625, 0.03125};
  const auto rows = alt_discrepancy(s, ts);
  os << "per-step discrepancy D(t), D/t:";
  for (const auto& r : rows) {
    ok = ok && r.discrepancy <= r.bound;
    os << " " << num(r.t) << ":" << num(r.discrepancy) << "," << num(r.per_time);
  }
  for (std::size_t k = 1; k < rows.size(); ++k) ok = ok && rows[k].per_time < rows[k - 1].per_time;
  os << " (D <= ||B||^2 t^2 ||u||, D/t decreasing)";
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  set_thread_count(1);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"appendix exponential", c1_exponential},
      {"appendix one-step oracle", c2_one_step},
      {"appendix residual", c3_residual},
      {"dyadic convergence (appendix torus)", c4_dyadic},
      {"inequality suite", c5_inequalities},
      {"degenerate semigroup", c6_degenerate},
      {"consistency probe", c7_consistency},
      {"brute-force equivalence", c8_brute_force},
      {"alternative schemes", c9_alternatives},
  };
  std::vector<int> selected;
  for (int k = 1; k < argc; ++k) selected.push_back(std::atoi(argv[k]));
  if (selected.empty()) {
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);
  }
  int failures = 0;
  for (int k : selected) {
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "no criterion " << k << "\n";
      return 2;
    }
    const auto& [name, run] = criteria[k - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << " " << name << ": "
              << o.detail << " [" << format_number(secs) << " s]" << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

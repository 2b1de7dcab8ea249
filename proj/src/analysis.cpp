#include "wchj/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "wchj/error.hpp"
#include "wchj/search.hpp"

namespace wchj {

using ordered_json = nlohmann::ordered_json;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::InconclusiveAtFloor: return "inconclusive-at-floor";
  }
  return "?";
}

Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
  if (a == Verdict::InconclusiveAtFloor || b == Verdict::InconclusiveAtFloor) {
    return Verdict::InconclusiveAtFloor;
  }
  return Verdict::Pass;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Rounded to the 12 significant digits used everywhere in output.
double r12(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(format_number(v));
}

std::string fmt(double v) { return format_number(v); }

Verdict verdict_of(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

}  // namespace

ReferenceSolution compute_reference(const Scenario& s, double T) {
  const auto t0 = std::chrono::steady_clock::now();
  ReferenceSolution ref{s.u0(), 0.0, "", 0, 0.0};
  const int d = s.sys.d();
  if (s.exact) {
    auto exact = s.exact;
    GridField f = GridField::sample(
        s.grid, d, [&](const Point& x, int c) { return exact(x, T, c); }, "closed form");
    ref.field = s.grid.periodic() ? f : f.with_linear_extrapolation();
    ref.description = "closed form";
    ref.seconds = seconds_since(t0);
    return ref;
  }
  const int factor = std::max(1, s.reference_factor);
  const Grid fine = s.grid.refined(factor);
  const ReferenceRun run = lf_solve(s.u0_on(fine), T, s.sys, s.cfl);
  ref.field = restrict_to(run.final_field, s.grid);
  ref.steps = run.steps;
  if (factor >= 2) {
    const Grid half = s.grid.refined(factor / 2);
    const ReferenceRun coarse = lf_solve(s.u0_on(half), T, s.sys, s.cfl);
    ref.floor = sup_diff(ref.field, restrict_to(coarse.final_field, s.grid), Region::Core);
  }
  ref.description = "lax-friedrichs h/" + std::to_string(factor);
  ref.seconds = seconds_since(t0);
  return ref;
}

ConvergenceReport run_convergence(const Scenario& s, int n_min, int n_max) {
  ConvergenceReport rep;
  rep.scenario = s.name;
  rep.op = to_string(s.scheme.op);
  rep.grid = s.grid.describe();
  if (n_min < 0 || n_max < n_min) {
    throw Error(ErrorCode::InvalidArgument, "run_convergence: need 0 <= n_min <= n_max");
  }
  const SchemeConfig& cfg = s.scheme;
  int lo = n_min;
  while (lo <= n_max && std::ldexp(s.T, -lo) > cfg.t_max * (1.0 + 1e-12)) ++lo;
  if (cfg.op == OperatorKind::Linearized) {
    const double b = s.sys.coupling_norm_bound();
    while (lo <= n_max && std::ldexp(s.T, -lo) * b > 1.0) ++lo;
  }
  if (lo != n_min) {
    rep.note = "n range starts at " + std::to_string(lo) +
               " (step must satisfy t <= t_max and, for the linearized operator, t ||B|| <= 1)";
  }
  if (lo > n_max) throw Error(ErrorCode::StepTooLarge, "run_convergence: no admissible n");

  const ReferenceSolution ref = compute_reference(s, s.T);
  rep.reference = ref.description;
  rep.reference_seconds = ref.seconds;
  const GridField u0 = s.u0();
  rep.tol_split = tol_split(u0, cfg);
  rep.floor = ref.floor;
  rep.tol_combined = rep.tol_split + 3.0 * rep.floor;

  std::optional<GridField> prev;
  for (int n = lo; n <= n_max; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    GridField w = iterate_dyadic(u0, s.T, n, s.sys, cfg);
    ErrorRow row;
    row.n = n;
    row.error = sup_diff(w, ref.field, Region::Core);
    row.subsolution_excess = max_excess(ref.field, w, Region::Core);
    row.seconds = seconds_since(t0);
    rep.max_subsolution_excess = std::max(rep.max_subsolution_excess, row.subsolution_excess);
    if (prev) {
      rep.max_dyadic_excess = std::max(rep.max_dyadic_excess, max_excess(w, *prev, Region::Core));
    }
    rep.rows.push_back(row);
    prev = std::move(w);
  }

  const double e_first = rep.rows.front().error;
  const double e_last = rep.rows.back().error;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    rep.max_increase = std::max(rep.max_increase, rep.rows[k].error - rep.rows[k - 1].error);
  }
  rep.monotone_checked = cfg.op == OperatorKind::Twisted;
  rep.monotone = rep.max_increase <= rep.tol_split;
  rep.bound = std::max(3.0 * rep.floor, e_first / 3.0);
  rep.bound_ok = e_last <= rep.bound;

  // Empirical order on the points well above the floor.
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rep.rows) {
    if (r.error > 10.0 * rep.floor && r.error > 0.0) {
      pts.push_back({-r.n * std::log(2.0), std::log(r.error)});
    }
  }
  rep.order_points = static_cast<int>(pts.size());
  if (pts.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (auto& p : pts) {
      mx += p.first;
      my += p.second;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0.0, sxx = 0.0;
    for (auto& p : pts) {
      sxy += (p.first - mx) * (p.second - my);
      sxx += (p.first - mx) * (p.first - mx);
    }
    if (sxx > 0.0) rep.order = sxy / sxx;
  }

  if (s.sys.coupling_is_zero()) {
    double emin = e_first, emax = e_first;
    for (const auto& r : rep.rows) {
      emin = std::min(emin, r.error);
      emax = std::max(emax, r.error);
    }
    const bool flat = emax - emin <= rep.tol_split;
    rep.verdict = verdict_of(flat);
    rep.label = flat ? "semigroup (flat) convergence" : "not flat although B = 0";
    return rep;
  }
  if (e_first <= 3.0 * rep.floor) {
    rep.verdict = Verdict::InconclusiveAtFloor;
    rep.label = "inconclusive-at-floor";
    return rep;
  }
  const bool ok = rep.bound_ok && (!rep.monotone_checked || rep.monotone);
  rep.verdict = verdict_of(ok);
  rep.label = ok ? "converged" : (!rep.bound_ok ? "error did not drop below the bound"
                                                : "errors increase beyond tol_split");
  return rep;
}

std::vector<ConvergenceReport> run_convergence_ladder(const Scenario& s,
                                                      std::span<const Grid> ladder, int n_min,
                                                      int n_max) {
  std::vector<ConvergenceReport> out;
  for (const Grid& g : ladder) {
    Scenario local = s;
    local.grid = g;
    out.push_back(run_convergence(local, n_min, n_max));
  }
  return out;
}

std::string ConvergenceReport::text(bool timings) const {
  std::ostringstream os;
  os << "convergence scenario=" << scenario << " operator=" << op << "\n";
  os << "  grid: " << grid << "\n  reference: " << reference << "\n";
  os << "  tol_split=" << fmt(tol_split) << " floor=" << fmt(floor)
     << " tol_combined=" << fmt(tol_combined) << "\n";
  if (!note.empty()) os << "  note: " << note << "\n";
  for (const auto& r : rows) {
    os << "  n=" << r.n << " error=" << fmt(r.error)
       << " subsolution_excess=" << fmt(r.subsolution_excess);
    if (timings) os << " seconds=" << fmt(r.seconds);
    os << "\n";
  }
  os << "  max_increase=" << fmt(max_increase) << " (<= tol_split "
     << (monotone_checked ? (monotone ? "yes" : "no") : "not required") << ")\n";
  os << "  e_last=" << fmt(rows.empty() ? 0.0 : rows.back().error) << " bound=" << fmt(bound)
     << " (" << (bound_ok ? "met" : "missed") << ")\n";
  os << "  max_dyadic_excess=" << fmt(max_dyadic_excess)
     << " max_subsolution_excess=" << fmt(max_subsolution_excess) << " (<= tol_combined "
     << (max_subsolution_excess <= tol_combined ? "yes" : "no") << ")\n";
  os << "  empirical_order=" << (order ? fmt(*order) : std::string("n/a")) << " ("
     << order_points << " points above 10x floor)\n";
  if (timings) os << "  reference_seconds=" << fmt(reference_seconds) << "\n";
  os << "  verdict: " << to_string(verdict) << " (" << label << ")\n";
  return os.str();
}

std::string ConvergenceReport::json(bool timings) const {
  ordered_json j;
  j["scenario"] = scenario;
  j["operator"] = op;
  j["grid"] = grid;
  j["reference"] = reference;
  j["tol_split"] = r12(tol_split);
  j["floor"] = r12(floor);
  j["tol_combined"] = r12(tol_combined);
  ordered_json rs = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json e;
    e["n"] = r.n;
    e["error"] = r12(r.error);
    e["subsolution_excess"] = r12(r.subsolution_excess);
    if (timings) e["seconds"] = r12(r.seconds);
    rs.push_back(e);
  }
  j["rows"] = rs;
  j["max_increase"] = r12(max_increase);
  j["monotone_checked"] = monotone_checked;
  j["monotone"] = monotone;
  j["bound"] = r12(bound);
  j["bound_ok"] = bound_ok;
  j["max_dyadic_excess"] = r12(max_dyadic_excess);
  j["max_subsolution_excess"] = r12(max_subsolution_excess);
  if (order) {
    j["empirical_order"] = r12(*order);
  } else {
    j["empirical_order"] = nullptr;
  }
  j["order_points"] = order_points;
  if (!note.empty()) j["note"] = note;
  j["verdict"] = to_string(verdict);
  j["label"] = label;
  return j.dump(2);
}

std::string ConvergenceReport::csv() const {
  std::ostringstream os;
  os << "n,error,subsolution_excess\n";
  for (const auto& r : rows) {
    os << r.n << ',' << fmt(r.error) << ',' << fmt(r.subsolution_excess) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- properties

namespace {

/// Row sums of the datum weight of op at x: e^{-tB}1, e^{-tB(x)}1 or (Id - tB(x))1.
std::vector<double> datum_row_sums(const SystemSpec& sys, OperatorKind op, double t,
                                   const Point& x) {
  const int d = sys.d();
  Matrix w;
  if (op == OperatorKind::Linearized) {
    w = Matrix::Identity(d, d) - t * sys.coupling_at(x);
  } else if (sys.constant_coupling()) {
    w = exp_neg(sys.matrix(), t);
  } else {
    w = exp_neg(std::get<CouplingField>(sys.coupling).at(x), t);
  }
  std::vector<double> r(d);
  for (int i = 0; i < d; ++i) r[i] = w.row(i).sum();
  return r;
}

struct Perturbed {
  GridField field;
  /// sup over all of R^N of |perturbation|.
  double sup;
};

/// u + scale * r (or scale * |r|) for a seeded periodic random field r. On a
/// bounded grid the exterior becomes u's exterior plus the same perturbation,
/// so the comparison also holds where the feet leave the box.
Perturbed perturb(const GridField& u, std::uint64_t seed, double scale, bool absolute) {
  InitialDatum datum;
  datum.family = "random";
  datum.seed = seed;
  const Grid& g = u.grid();
  auto r = initial_sampler(datum, u.d(), g.dim());
  auto pert = [r, scale, absolute](const Point& x, int c) {
    const double w = r(x, c);
    return scale * (absolute ? std::abs(w) : w);
  };
  std::vector<double> out(u.values().begin(), u.values().end());
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const Point x = g.point(node);
    for (int c = 0; c < u.d(); ++c) out[node * u.d() + c] += pert(x, c);
  }
  GridField f = u.with_values(std::move(out), u.provenance() + " + perturbation");
  if (!g.periodic() && u.has_exterior()) {
    f = f.with_exterior([u, pert](const Point& x, int c) {
      const Grid& gg = u.grid();
      const long i0 = std::lround((x[0] - gg.origin()) / gg.spacing());
      const long i1 = gg.dim() == 2 ? std::lround((x[1] - gg.origin()) / gg.spacing()) : 0;
      return u.lifted(i0, i1, c) + pert(x, c);
    });
  }
  // r is 1-periodic, so its sup over R^N is its sup over a period.
  double sup = 0.0;
  const int m = g.dim() == 1 ? 4096 : 256;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < (g.dim() == 2 ? m : 1); ++b) {
      const Point x{static_cast<double>(a) / m, static_cast<double>(b) / m};
      for (int c = 0; c < u.d(); ++c) sup = std::max(sup, std::abs(pert(x, c)));
    }
  }
  return {std::move(f), sup};
}

/// Aggregates a check over several samples.
struct Accumulator {
  std::string name;
  double tolerance;
  std::string samples;
  double worst = 0.0;
  int count = 0;
  std::string note;

  void add(double v) {
    worst = count == 0 ? v : std::max(worst, v);
    ++count;
  }
  PropertyCheck finish() const {
    PropertyCheck c{name, worst, tolerance, samples, verdict_of(worst <= tolerance), note};
    return c;
  }
};

struct OperatorChecks {
  double monotonicity = 0.0;
  double shift = 0.0;
  double nonexpansive = 0.0;
  /// Normalized by tol_split.
  double superadditivity = 0.0;
  double dyadic = 0.0;
  double subsolution = 0.0;
  double tol = 0.0;
  double tol_combined = 0.0;
  double best_gap = -1e300;
  std::size_t gap_node = 0;
  int gap_comp = 0;
};

/// The operator invariants for one datum. ref (optional) is S(t)u on u's grid.
OperatorChecks operator_checks(const GridField& u, const SystemSpec& sys, const SchemeConfig& cfg,
                               double t, std::uint64_t seed, int levels,
                               const ReferenceSolution* ref) {
  OperatorChecks out;
  const Grid& g = u.grid();
  auto step = [&](const GridField& f, double tau) { return operator_step(f, tau, sys, cfg).output; };
  const GridField wu = step(u, t);

  // Monotonicity: u <= u + |r|.
  const GridField above = perturb(u, seed * 7919 + 1, 0.5, true).field;
  out.monotonicity = std::max(0.0, max_excess(wu, step(above, t)));

  // Constant shift law.
  const double k = 0.37;
  const GridField ws = step(u.shifted(k), t);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const auto rows = datum_row_sums(sys, cfg.op, t, g.point(node));
    for (int i = 0; i < u.d(); ++i) {
      out.shift = std::max(out.shift, std::abs(ws(node, i) - wu(node, i) - k * rows[i]));
    }
  }

  // Non-expansiveness.
  const Perturbed v = perturb(u, seed * 7919 + 2, 0.3, false);
  const double dist = g.periodic() ? sup_diff(u, v.field) : std::max(sup_diff(u, v.field), v.sup);
  out.nonexpansive = std::max(0.0, sup_diff(wu, step(v.field, t)) - dist);

  out.tol = tol_split(u, cfg);
  // Superadditivity W(t)u >= W(t2) o W(t1) u - tol_split on sampled splits.
  for (double frac : {0.5, 1.0 / 3.0, 2.0 / 3.0}) {
    const double t1 = frac * t;
    const double times[2] = {t1, t - t1};
    const GridField ww = iterate_partition(u, times, sys, cfg);
    out.superadditivity = std::max(out.superadditivity, max_excess(ww, wu, Region::Core) / out.tol);
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      if (!g.in_core(node)) continue;
      for (int i = 0; i < u.d(); ++i) {
        const double gap = wu(node, i) - ww(node, i);
        if (gap > out.best_gap) {
          out.best_gap = gap;
          out.gap_node = node;
          out.gap_comp = i;
        }
      }
    }
  }

  // Dyadic decrease and subsolution bound.
  std::optional<GridField> prev;
  out.tol_combined = out.tol + (ref ? 3.0 * ref->floor : 0.0);
  for (int n = 0; n <= levels; ++n) {
    GridField w = n == 0 ? wu : iterate_dyadic(u, t, n, sys, cfg);
    if (prev) out.dyadic = std::max(out.dyadic, max_excess(w, *prev, Region::Core) / out.tol);
    if (ref) {
      out.subsolution = std::max(out.subsolution,
                                 max_excess(ref->field, w, Region::Core) / out.tol_combined);
    }
    prev = std::move(w);
  }
  if (ref) {
    const double third[3] = {t / 3.0, t / 3.0, t / 3.0};
    const GridField w3 = iterate_partition(u, third, sys, cfg);
    out.subsolution =
        std::max(out.subsolution, max_excess(ref->field, w3, Region::Core) / out.tol_combined);
  }
  return out;
}

}  // namespace

Verdict PropertyReport::verdict() const {
  Verdict v = Verdict::Pass;
  for (const auto& c : checks) v = combine(v, c.verdict);
  return v;
}

const PropertyCheck* PropertyReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

PropertyReport run_properties(const Scenario& s, std::uint64_t seed, const PropertyOptions& opt) {
  PropertyReport rep;
  rep.scenario = s.name;
  rep.seed = seed;
  const SchemeConfig& cfg = s.scheme;
  const double t = std::min(s.T, cfg.t_max);

  auto add = [&](PropertyCheck c) { rep.checks.push_back(std::move(c)); };

  if (opt.scenario_checks) {
    // Exponential sign structure.
    {
      ExpAudit worst;
      worst.min_entry = 1.0;
      worst.max_row_sum = 0.0;
      worst.min_row_sum = 1.0;
      std::string samples;
      auto merge = [&](const ExpAudit& a) {
        worst.taus += a.taus;
        worst.min_entry = std::min(worst.min_entry, a.min_entry);
        worst.max_row_sum = std::max(worst.max_row_sum, a.max_row_sum);
        worst.min_row_sum = std::min(worst.min_row_sum, a.min_row_sum);
        worst.semigroup_defect = std::max(worst.semigroup_defect, a.semigroup_defect);
        worst.decay_violation = std::max(worst.decay_violation, a.decay_violation);
      };
      if (s.sys.constant_coupling()) {
        merge(audit_exponential(s.sys.matrix()));
        samples = "26 tau values in [0, 10]";
      } else {
        const auto& field = std::get<CouplingField>(s.sys.coupling);
        for (int k = 0; k < 16; ++k) merge(audit_exponential(field.at({(k + 0.5) / 16.0, 0.3})));
        samples = "16 points x 26 tau values";
      }
      const double viol = std::max({-worst.min_entry, worst.max_row_sum - 1.0, -worst.min_row_sum,
                                    worst.decay_violation, 0.0});
      add({"exp-signs", viol, kMatrixTolerance, samples, verdict_of(viol <= kMatrixTolerance),
           "entries >= 0, row sums in [0, 1], non-increasing in tau"});
      add({"exp-semigroup", worst.semigroup_defect, 1e-10, samples,
           verdict_of(worst.semigroup_defect <= 1e-10), ""});
    }

    const GridField u = s.u0();
    std::optional<ReferenceSolution> ref;
    try {
      ref = compute_reference(s, t);
    } catch (const Error& e) {
      add({"reference", 0.0, 0.0, "", Verdict::Fail, e.what()});
    }
    const OperatorChecks oc = operator_checks(u, s.sys, cfg, t, seed, opt.dyadic_levels,
                                              ref ? &*ref : nullptr);
    const std::string samp = "scenario datum, t=" + fmt(t);
    add({"monotonicity", oc.monotonicity, 1e-12, samp, verdict_of(oc.monotonicity <= 1e-12), ""});
    add({"shift-law", oc.shift, 1e-10, samp, verdict_of(oc.shift <= 1e-10), "k = 0.37"});
    add({"non-expansive", oc.nonexpansive, 1e-10, samp, verdict_of(oc.nonexpansive <= 1e-10), ""});
    add({"superadditivity", oc.superadditivity * oc.tol, oc.tol, samp + ", splits 1/2 1/3 2/3",
         verdict_of(oc.superadditivity <= 1.0), "max excess of W(t2)W(t1)u over W(t)u"});
    add({"dyadic-decrease", oc.dyadic * oc.tol, oc.tol,
         samp + ", n = 0.." + std::to_string(opt.dyadic_levels), verdict_of(oc.dyadic <= 1.0), ""});
    if (ref) {
      add({"subsolution-bound", oc.subsolution * oc.tol_combined, oc.tol_combined,
           samp + ", dyadic and 3-step partitions vs " + ref->description,
           verdict_of(oc.subsolution <= 1.0), "tol_combined = tol_split + 3 floor"});
    }
    if (oc.best_gap > 10.0 * oc.tol) {
      rep.witness = {true, s.name, oc.gap_node, u.grid().point(oc.gap_node), oc.gap_comp,
                     oc.best_gap, oc.tol};
    }
    {
      const double gap = std::max(0.0, oc.best_gap);
      const bool strict = gap > 10.0 * oc.tol;
      PropertyCheck c{"superadditivity-gap", gap, 10.0 * oc.tol, samp,
                      Verdict::Pass,
                      strict ? "strict gap witnessed" : "no gap above 10 tol_split on this datum"};
      c.max_violation = gap;
      add(c);
    }

    if (s.sys.coupling_is_zero()) {
      const double half[2] = {t / 2.0, t / 2.0};
      const GridField w1 = operator_step(u, t, s.sys, cfg).output;
      const GridField w2 = iterate_partition(u, half, s.sys, cfg);
      const double tol = tol_split(u, cfg);
      const double dev = sup_diff(w1, w2, Region::Core);
      add({"semigroup-B0", dev, tol, samp, verdict_of(dev <= tol), "W(t)u vs W(t/2)^2 u"});
      SchemeConfig c2 = cfg;
      double spread = 0.0;
      c2.op = OperatorKind::Twisted;
      const GridField a = operator_step(u, t, s.sys, c2).output;
      c2.op = OperatorKind::ExpAtEndpoint;
      const GridField b = operator_step(u, t, s.sys, c2).output;
      c2.op = OperatorKind::Linearized;
      const GridField c = operator_step(u, t, s.sys, c2).output;
      spread = std::max(sup_diff(a, b), sup_diff(a, c));
      add({"operators-coincide-B0", spread, 1e-10, samp, verdict_of(spread <= 1e-10), ""});
    }

    if (auto phi = analytic_initial(s.initial, s.sys.d(), s.grid.dim())) {
      const double ts[4] = {t / 10.0, t / 20.0, t / 40.0, t / 80.0};
      const ConsistencyReport cr = run_consistency(s, ts);
      add({"consistency", cr.rows.back().residual, cr.rows.front().residual,
           "t = T/10 .. T/80", verdict_of(cr.vanishing),
           "residual vanishes with t; order " + (cr.order ? fmt(*cr.order) : std::string("n/a")) +
               ", floor target " + (cr.verdict == Verdict::Pass ? "reached" : "not reached")});
    }

    // Reference solver invariants (torus only: linear ghosts are not monotone).
    if (s.grid.periodic()) {
      const GridField above = perturb(u, seed * 31 + 5, 0.5, true).field;
      const double tref = std::min(t, 0.25);
      LfOptions lo;
      lo.alpha = std::max(lf_alpha(u, tref, s.sys), lf_alpha(above, tref, s.sys));
      const GridField a = lf_solve(u, tref, s.sys, s.cfl, lo).final_field;
      const GridField b = lf_solve(above, tref, s.sys, s.cfl, lo).final_field;
      const double viol = std::max(0.0, max_excess(a, b));
      add({"reference-comparison", viol, 1e-12, "u <= u + |r|, T=" + fmt(tref),
           verdict_of(viol <= 1e-12), ""});
      if (s.sys.coupling_is_zero() && s.sys.constant_coupling()) {
        double diff = 0.0;
        for (int i = 0; i < s.sys.d(); ++i) {
          SystemSpec single{{s.sys.components[i]}, CouplingMatrix::zero(1), "component"};
          std::vector<double> vals(u.grid().node_count());
          for (std::size_t n = 0; n < vals.size(); ++n) vals[n] = u(n, i);
          const GridField ui(u.grid(), 1, std::move(vals));
          LfOptions one;
          one.alpha = lf_alpha(u, tref, s.sys);
          const GridField si = lf_solve(ui, tref, single, s.cfl, one).final_field;
          const GridField all = lf_solve(u, tref, s.sys, s.cfl, one).final_field;
          for (std::size_t n = 0; n < vals.size(); ++n) {
            diff = std::max(diff, si(n, 0) == all(n, i) ? 0.0 : std::abs(si(n, 0) - all(n, i)) + 1e-300);
          }
        }
        add({"reference-decoupled", diff, 0.0, "per-component scalar solves",
             verdict_of(diff == 0.0), "bit-for-bit"});
      }
    }
  }

  if (opt.random_fields > 0) {
    Accumulator mono{"random/monotonicity", 1e-12, "", 0, 0, ""};
    Accumulator shift{"random/shift-law", 1e-10, "", 0, 0, ""};
    Accumulator nonexp{"random/non-expansive", 1e-10, "", 0, 0, ""};
    Accumulator sup{"random/superadditivity", 1.0, "", 0, 0, "ratio excess / tol_split"};
    Accumulator dya{"random/dyadic-decrease", 1.0, "", 0, 0, "ratio excess / tol_split"};
    Accumulator sub{"random/subsolution-bound", 1.0, "", 0, 0, "ratio excess / tol_combined"};
    double best_ratio = -1e300;
    const std::string samples = std::to_string(opt.random_fields) +
                                " seeded fields, d in {2,3}, torus m=" +
                                std::to_string(opt.random_m) + ", t=" + fmt(opt.random_t);
    for (auto* a : {&mono, &shift, &nonexp, &sup, &dya, &sub}) a->samples = samples;
    SchemeConfig rc = cfg;
    rc.op = OperatorKind::Twisted;
    rc.t_max = std::max(rc.t_max, opt.random_t);
    for (int f = 0; f < opt.random_fields; ++f) {
      const int d = 2 + (f % 2);
      const std::uint64_t fs = seed * 1000003ULL + static_cast<std::uint64_t>(f);
      std::vector<LagrangianSpec> comps(d, catalog::quadratic(1));
      SystemSpec sys{comps, random_coupling(d, fs), "random"};
      Scenario rs;
      rs.name = "random";
      rs.sys = sys;
      rs.grid = Grid::torus(1, opt.random_m);
      rs.initial.family = "random";
      rs.initial.seed = fs;
      rs.T = opt.random_t;
      rs.scheme = rc;
      const GridField u = rs.u0();
      const ReferenceSolution ref = compute_reference(rs, opt.random_t);
      const OperatorChecks oc =
          operator_checks(u, sys, rc, opt.random_t, fs, opt.dyadic_levels, &ref);
      mono.add(oc.monotonicity);
      shift.add(oc.shift);
      nonexp.add(oc.nonexpansive);
      sup.add(oc.superadditivity);
      dya.add(oc.dyadic);
      sub.add(oc.subsolution);
      const double ratio = oc.best_gap / oc.tol;
      if (ratio > best_ratio && ratio > 10.0 && !rep.witness.found) {
        best_ratio = ratio;
        rep.witness = {true, "random seed " + std::to_string(fs), oc.gap_node,
                       u.grid().point(oc.gap_node), oc.gap_comp, oc.best_gap, oc.tol};
      }
    }
    for (auto* a : {&mono, &shift, &nonexp, &sup, &dya, &sub}) add(a->finish());
  }
  return rep;
}

std::string PropertyReport::text() const {
  std::ostringstream os;
  os << "properties scenario=" << scenario << " seed=" << seed << "\n";
  for (const auto& c : checks) {
    os << "  [" << to_string(c.verdict) << "] " << c.name << ": max_violation="
       << fmt(c.max_violation) << " tolerance=" << fmt(c.tolerance);
    if (!c.samples.empty()) os << " samples=\"" << c.samples << "\"";
    if (!c.note.empty()) os << " note=\"" << c.note << "\"";
    os << "\n";
  }
  if (witness.found) {
    os << "  witness: " << witness.scenario << " node=" << witness.node
       << " x=" << fmt(witness.x[0]) << " component=" << witness.component + 1
       << " gap=" << fmt(witness.gap) << " tol_split=" << fmt(witness.tol_split) << "\n";
  } else {
    os << "  witness: none (no gap above 10 tol_split)\n";
  }
  os << "  verdict: " << to_string(verdict()) << "\n";
  return os.str();
}

std::string PropertyReport::json() const {
  ordered_json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  ordered_json cs = ordered_json::array();
  for (const auto& c : checks) {
    ordered_json e;
    e["name"] = c.name;
    e["max_violation"] = r12(c.max_violation);
    e["tolerance"] = r12(c.tolerance);
    e["samples"] = c.samples;
    e["verdict"] = to_string(c.verdict);
    if (!c.note.empty()) e["note"] = c.note;
    cs.push_back(e);
  }
  j["checks"] = cs;
  if (witness.found) {
    j["witness"] = {{"scenario", witness.scenario},
                    {"node", witness.node},
                    {"x", r12(witness.x[0])},
                    {"component", witness.component + 1},
                    {"gap", r12(witness.gap)},
                    {"tol_split", r12(witness.tol_split)}};
  } else {
    j["witness"] = nullptr;
  }
  j["verdict"] = to_string(verdict());
  return j.dump(2);
}

std::string PropertyReport::csv() const {
  std::ostringstream os;
  os << "check,max_violation,tolerance,verdict\n";
  for (const auto& c : checks) {
    os << c.name << ',' << fmt(c.max_violation) << ',' << fmt(c.tolerance) << ','
       << to_string(c.verdict) << '\n';
  }
  return os.str();
}

// ------------------------------------------------------------------ residual

namespace {

/// Godunov flux of a convex H between one-sided slopes pm (left), pp (right).
double godunov(const LagrangianSpec& spec, const Point& x, double pm, double pp) {
  auto H = [&](double p) { return spec.H(x, Point{p, 0.0}); };
  if (pm <= pp) {
    const SearchResult r = golden_min(H, pm, pp, 80);
    return std::min({r.value, H(pm), H(pp)});
  }
  return std::max(H(pm), H(pp));
}

}  // namespace

ResidualAudit residual_audit(std::span<const GridField> fields, double t0, double dt,
                             const SystemSpec& sys) {
  (void)t0;
  if (fields.size() < 3) {
    throw Error(ErrorCode::InsufficientTimeLevels, "residual_audit: needs >= 3 time levels");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "residual_audit: dt must be > 0");
  const Grid& g = fields[0].grid();
  for (const auto& f : fields) {
    if (!(f.grid() == g) || f.d() != sys.d()) {
      throw Error(ErrorCode::ShapeMismatch, "residual_audit: fields differ in shape");
    }
  }
  const int d = sys.d();
  const int dim = g.dim();
  const double h = g.spacing();
  const long n = g.nodes_per_axis();
  ResidualAudit out;
  out.sup.assign(d, 0.0);
  out.at_sup.assign(d, 0.0);
  out.mean.assign(d, 0.0);
  out.sign.assign(d, 0);
  std::vector<long> count(d, 0);
  for (std::size_t k = 1; k + 1 < fields.size(); ++k) {
    const GridField& u = fields[k];
    ++out.levels_used;
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      if (!g.in_core(node)) continue;
      const auto idx = g.index(node);
      if (!g.periodic() && !u.has_exterior()) {
        bool edge = idx[0] == 0 || idx[0] == n - 1;
        if (dim == 2) edge = edge || idx[1] == 0 || idx[1] == n - 1;
        if (edge) continue;
      }
      const Point x = g.point(node);
      const Matrix b = sys.coupling_at(x);
      for (int i = 0; i < d; ++i) {
        const double ut = (fields[k + 1](node, i) - fields[k - 1](node, i)) / (2.0 * dt);
        const double c = u(node, i);
        double hval;
        if (dim == 1) {
          const double pm = (c - u.lifted(idx[0] - 1, 0, i)) / h;
          const double pp = (u.lifted(idx[0] + 1, 0, i) - c) / h;
          hval = godunov(sys.components[i], x, pm, pp);
        } else {
          Point p{(u.lifted(idx[0] + 1, idx[1], i) - u.lifted(idx[0] - 1, idx[1], i)) / (2.0 * h),
                  (u.lifted(idx[0], idx[1] + 1, i) - u.lifted(idx[0], idx[1] - 1, i)) / (2.0 * h)};
          hval = sys.components[i].H(x, p);
        }
        double bu = 0.0;
        for (int j = 0; j < d; ++j) bu += b(i, j) * u(node, j);
        const double r = ut + hval + bu;
        if (std::abs(r) > out.sup[i]) {
          out.sup[i] = std::abs(r);
          out.at_sup[i] = r;
        }
        out.mean[i] += r;
        ++count[i];
      }
    }
  }
  for (int i = 0; i < d; ++i) {
    if (count[i] > 0) out.mean[i] /= static_cast<double>(count[i]);
    out.sign[i] = out.mean[i] > 0.0 ? 1 : (out.mean[i] < 0.0 ? -1 : 0);
  }
  return out;
}

// --------------------------------------------------------------- exponential

bool ExpAudit::passed() const {
  return min_entry >= -kMatrixTolerance && max_row_sum <= 1.0 + kMatrixTolerance &&
         min_row_sum >= -kMatrixTolerance && semigroup_defect <= 1e-10 &&
         decay_violation <= kMatrixTolerance;
}

ExpAudit audit_exponential(const CouplingMatrix& b, int samples) {
  std::vector<double> taus{0.0};
  for (int k = 0; k < samples; ++k) {
    taus.push_back(1e-3 * std::pow(1e4, static_cast<double>(k) / std::max(1, samples - 1)));
  }
  ExpAudit a;
  a.taus = static_cast<int>(taus.size());
  a.min_entry = 1.0;
  a.max_row_sum = 0.0;
  a.min_row_sum = 1.0;
  std::vector<Matrix> e;
  for (double tau : taus) e.push_back(exp_neg(b, tau));
  Vector prev;
  for (std::size_t k = 0; k < e.size(); ++k) {
    a.min_entry = std::min(a.min_entry, e[k].minCoeff());
    const Vector rows = e[k].rowwise().sum();
    a.max_row_sum = std::max(a.max_row_sum, rows.maxCoeff());
    a.min_row_sum = std::min(a.min_row_sum, rows.minCoeff());
    if (k > 0) a.decay_violation = std::max(a.decay_violation, (rows - prev).maxCoeff());
    prev = rows;
  }
  for (std::size_t i = 0; i < taus.size(); i += 3) {
    for (std::size_t j = i; j < taus.size(); j += 2) {
      const Matrix lhs = exp_neg(b, taus[i] + taus[j]);
      a.semigroup_defect =
          std::max(a.semigroup_defect, (lhs - e[i] * e[j]).cwiseAbs().maxCoeff());
    }
  }
  return a;
}

// ------------------------------------------------------------------ appendix

AppendixReport run_appendix(const Scenario& s, std::span<const double> ts, double rel_tol) {
  if (s.sys.d() != 2 || !s.sys.constant_coupling() || s.initial.family != "appendix-affine") {
    throw Error(ErrorCode::Config,
                "appendix suite needs the appendix system with appendix-affine data");
  }
  AppendixReport rep;
  rep.rel_tol = rel_tol;
  bool ok = true;
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    const Matrix e = exp_neg(s.sys.matrix(), t);
    const double a = 0.5 * (1.0 + std::exp(-2.0 * t));
    const double c = 0.5 * (1.0 - std::exp(-2.0 * t));
    Matrix closed(2, 2);
    closed << a, c, c, a;
    const double err = (e - closed).cwiseAbs().maxCoeff();
    rep.exponential.push_back({t, err});
    ok = ok && err <= 1e-10;
  }
  const GridField u0 = s.u0();
  const Grid& g = s.grid;
  const Point p = s.initial.p;
  for (double t : ts) {
    AppendixRow row;
    row.t = t;
    const double dt = t / 100.0;
    std::vector<GridField> levels;
    for (double tau : {t - dt, t, t + dt}) levels.push_back(twisted_step(u0, tau, s.sys, s.scheme).output);
    const GridField& w = levels[1];
    for (std::size_t node = 0; node < g.node_count(); ++node) {
      if (!g.in_core(node)) continue;
      const auto ex = appendix_exact_W(t, g.point(node), p, g.dim());
      for (int c = 0; c < 2; ++c) row.step_error = std::max(row.step_error, std::abs(w(node, c) - ex[c]));
    }
    const ResidualAudit audit = residual_audit(levels, t - dt, dt, s.sys);
    row.expected = appendix_residual(t, p, g.dim());
    for (int c = 0; c < 2; ++c) {
      row.measured[c] = audit.at_sup[c];
      row.rel_error[c] = std::abs(row.measured[c] - row.expected[c]) / std::abs(row.expected[c]);
    }
    const double r = row.expected[0];
    for (int c = 0; c < 2; ++c) row.rederived_rel_error[c] = std::abs(row.measured[c] - r) / std::abs(r);
    row.rederived_sign_ok = row.measured[0] > 0.0 && row.measured[1] > 0.0;
    row.sign_ok = row.measured[0] > 0.0 && row.measured[1] < 0.0 && audit.sign[0] == 1 &&
                  audit.sign[1] == -1;
    ok = ok && row.sign_ok && row.rel_error[0] <= rel_tol && row.rel_error[1] <= rel_tol &&
         row.step_error <= rep.step_tol;
    rep.rows.push_back(row);
  }
  rep.verdict = verdict_of(ok);
  return rep;
}

std::string AppendixReport::text() const {
  std::ostringstream os;
  os << "appendix oracle suite\n";
  for (const auto& e : exponential) {
    os << "  exp t=" << fmt(e.t) << " max_entry_error=" << fmt(e.error) << " (tol 1e-10)\n";
  }
  os << "  t,expected_1,measured_1,rel_error_1,expected_2,measured_2,rel_error_2,sign_ok,"
        "step_error,rederived_rel_error_2,rederived_sign_ok\n";
  for (const auto& r : rows) {
    os << "  " << fmt(r.t) << ',' << fmt(r.expected[0]) << ',' << fmt(r.measured[0]) << ','
       << fmt(r.rel_error[0]) << ',' << fmt(r.expected[1]) << ',' << fmt(r.measured[1]) << ','
       << fmt(r.rel_error[1]) << ',' << (r.sign_ok ? "yes" : "no") << ',' << fmt(r.step_error) << ','
       << fmt(r.rederived_rel_error[1]) << ',' << (r.rederived_sign_ok ? "yes" : "no") << '\n';
  }
  os << "  tolerances: relative " << fmt(rel_tol) << ", one-step " << fmt(step_tol) << "\n";
  os << "  verdict: " << to_string(verdict) << "\n";
  return os.str();
}

std::string AppendixReport::json() const {
  ordered_json j;
  ordered_json ex = ordered_json::array();
  for (const auto& e : exponential) ex.push_back({{"t", r12(e.t)}, {"error", r12(e.error)}});
  j["exponential"] = ex;
  ordered_json rs = ordered_json::array();
  for (const auto& r : rows) {
    rs.push_back({{"t", r12(r.t)},
                  {"expected", {r12(r.expected[0]), r12(r.expected[1])}},
                  {"measured", {r12(r.measured[0]), r12(r.measured[1])}},
                  {"rel_error", {r12(r.rel_error[0]), r12(r.rel_error[1])}},
                  {"sign_ok", r.sign_ok},
                  {"step_error", r12(r.step_error)},
                  {"rederived_rel_error", {r12(r.rederived_rel_error[0]), r12(r.rederived_rel_error[1])}},
                  {"rederived_sign_ok", r.rederived_sign_ok}});
  }
  j["rows"] = rs;
  j["rel_tol"] = r12(rel_tol);
  j["step_tol"] = r12(step_tol);
  j["verdict"] = to_string(verdict);
  return j.dump(2);
}

// --------------------------------------------------------------- consistency

ConsistencyReport run_consistency(const Scenario& s, std::span<const double> ts, double factor) {
  auto phi = analytic_initial(s.initial, s.sys.d(), s.grid.dim());
  if (!phi) throw Error(ErrorCode::InvalidArgument, "run_consistency: datum is not smooth");
  if (ts.empty()) throw Error(ErrorCode::InvalidArgument, "run_consistency: empty t sequence");
  ConsistencyReport rep;
  rep.factor = factor;
  rep.rows = consistency_probe(*phi, s.sys, s.grid, ts, s.scheme);
  const double tmin = ts.back();
  const auto fine = consistency_probe(*phi, s.sys, s.grid.refined(2), std::span(&tmin, 1), s.scheme);
  rep.spatial_floor = std::abs(rep.rows.back().residual - fine.front().residual);
  // Decrease until the first residual at or below factor * floor.
  bool reached = false;
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    if (rep.rows[k].residual <= factor * rep.spatial_floor) {
      reached = true;
      break;
    }
    if (k + 1 < rep.rows.size() && rep.rows[k + 1].residual > rep.rows[k].residual) {
      rep.monotone = false;
    }
  }
  bool nonincreasing = true;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    if (k > 0 && rep.rows[k].residual > rep.rows[k - 1].residual) nonincreasing = false;
    if (rep.rows[k].residual > 10.0 * rep.spatial_floor && rep.rows[k].residual > 0.0) {
      pts.push_back({std::log(rep.rows[k].t), std::log(rep.rows[k].residual)});
    }
  }
  if (pts.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (auto& p : pts) {
      mx += p.first;
      my += p.second;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0.0, sxx = 0.0;
    for (auto& p : pts) {
      sxy += (p.first - mx) * (p.second - my);
      sxx += (p.first - mx) * (p.first - mx);
    }
    if (sxx > 0.0) rep.order = sxy / sxx;
  }
  rep.vanishing = reached || (nonincreasing && rep.order && *rep.order >= 0.5);
  rep.verdict = verdict_of(reached && rep.monotone);
  return rep;
}

std::string ConsistencyReport::text() const {
  std::ostringstream os;
  os << "consistency probe\n";
  for (const auto& r : rows) os << "  t=" << fmt(r.t) << " residual=" << fmt(r.residual) << "\n";
  os << "  spatial_floor=" << fmt(spatial_floor) << " target=" << fmt(factor * spatial_floor)
     << " monotone=" << (monotone ? "yes" : "no") << "\n";
  os << "  order=" << (order ? fmt(*order) : std::string("n/a"))
     << " vanishing=" << (vanishing ? "yes" : "no") << "\n";
  os << "  verdict: " << to_string(verdict) << "\n";
  return os.str();
}

std::vector<AltDiscrepancyRow> alt_discrepancy(const Scenario& s, std::span<const double> ts) {
  const GridField u = s.u0();
  const double b = s.sys.coupling_norm_bound();
  std::vector<AltDiscrepancyRow> out;
  for (double t : ts) {
    const GridField lin = alt_lin_step(u, t, s.sys, s.scheme).output;
    const GridField ex = alt_exp_step(u, t, s.sys, s.scheme).output;
    AltDiscrepancyRow r;
    r.t = t;
    r.discrepancy = sup_diff(lin, ex);
    r.bound = b * b * t * t * u.sup_norm();
    r.per_time = r.discrepancy / t;
    out.push_back(r);
  }
  return out;
}

}  // namespace wchj

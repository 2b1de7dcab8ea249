#include "wchj/lax_oleinik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wchj/error.hpp"
#include "wchj/parallel.hpp"
#include "wchj/search.hpp"

namespace wchj {

const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::Twisted: return "twisted";
    case OperatorKind::ExpAtEndpoint: return "exp-at-endpoint";
    case OperatorKind::Linearized: return "linearized";
  }
  return "?";
}

const char* to_string(Quadrature q) {
  switch (q) {
    case Quadrature::RightEndpoint: return "right-endpoint";
    case Quadrature::Trapezoid: return "trapezoid";
    case Quadrature::Midpoint: return "midpoint";
  }
  return "?";
}

const char* to_string(Refinement r) {
  switch (r) {
    case Refinement::None: return "none";
    case Refinement::Golden: return "golden";
    case Refinement::SubGrid: return "subgrid";
  }
  return "?";
}

void SchemeConfig::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::Config, what); };
  if (!(window_multiplier >= 1.0)) bad("scheme: window multiplier must be >= 1");
  if (refinement_depth < 0 || refinement_depth > 200) bad("scheme: refinement depth out of range");
  if (subgrid_factor < 1 || subgrid_factor > 64) bad("scheme: subgrid factor out of range");
  if (!(t_max > 0.0)) bad("scheme: t_max must be positive");
  if (n_max < 0 || n_max > 30) bad("scheme: n_max out of range");
  if (velocity_bound && !(*velocity_bound > 0.0)) bad("scheme: velocity bound must be positive");
  if (!(tolerance_factor > 0.0)) bad("scheme: tolerance factor must be positive");
}

namespace {

constexpr int kMaxD = kMaxCouplingDim;

/// Everything a single step needs besides the per-node datum weight.
struct StepContext {
  const SystemSpec* sys = nullptr;
  OperatorKind op = OperatorKind::Twisted;
  Quadrature quad = Quadrature::Trapezoid;
  double t = 0.0;
  int d = 1;
  int dim = 1;
  /// Constant datum weight (twisted), else recomputed per node.
  Matrix datum;
  /// Weights on L(y, v) (trapezoid) or L(mid, v) (midpoint).
  Matrix lw;
  double omega = 1.0;
};

Matrix datum_weight(const StepContext& c, const Point& x) {
  switch (c.op) {
    case OperatorKind::Twisted:
      return c.datum;
    case OperatorKind::ExpAtEndpoint: {
      const SystemSpec& s = *c.sys;
      if (s.constant_coupling()) return exp_neg(s.matrix(), c.t);
      return exp_neg(std::get<CouplingField>(s.coupling).at(x), c.t);
    }
    case OperatorKind::Linearized: {
      const Matrix b = c.sys->coupling_at(x);
      const double rows = b.cwiseAbs().rowwise().sum().maxCoeff();
      if (c.t * rows > 1.0) {
        throw Error(ErrorCode::StepTooLarge,
                    "linearized step: t * ||B(x)|| = " + format_number(c.t * rows) + " > 1");
      }
      return Matrix::Identity(c.d, c.d) - c.t * b;
    }
  }
  return c.datum;
}

StepContext make_context(const SystemSpec& sys, double t, const SchemeConfig& cfg) {
  sys.validate();
  if (sys.d() > kMaxD) throw Error(ErrorCode::DimensionTooLarge, "step: d exceeds 64");
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw Error(t < 0.0 ? ErrorCode::NegativeTime : ErrorCode::InvalidArgument,
                "step: t must be a positive real");
  }
  if (t > cfg.t_max * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidArgument,
                "step: t = " + format_number(t) + " exceeds t_max = " + format_number(cfg.t_max));
  }
  StepContext c;
  c.sys = &sys;
  c.op = cfg.op;
  c.quad = cfg.quadrature;
  c.t = t;
  c.d = sys.d();
  c.dim = sys.space_dim();
  if (cfg.op == OperatorKind::Twisted) {
    if (!sys.constant_coupling()) {
      throw Error(ErrorCode::InvalidArgument,
                  "twisted step needs a constant coupling matrix; use an alternative operator");
    }
    c.datum = exp_neg(sys.matrix(), t);
    if (c.quad == Quadrature::Trapezoid) c.lw = c.datum;
    if (c.quad == Quadrature::Midpoint) c.lw = exp_neg(sys.matrix(), 0.5 * t);
  } else {
    c.lw = Matrix::Identity(c.d, c.d);
    if (cfg.op == OperatorKind::Linearized && t * sys.coupling_norm_bound() > 1.0) {
      throw Error(ErrorCode::StepTooLarge,
                  "linearized step: t * sup ||B|| = " +
                      format_number(t * sys.coupling_norm_bound()) + " > 1");
    }
  }
  c.omega = 1.0;
  if (c.quad == Quadrature::Trapezoid) {
    for (int i = 0; i < c.d; ++i) c.omega = std::min(c.omega, 0.5 * (1.0 + c.lw.row(i).sum()));
  } else if (c.quad == Quadrature::Midpoint) {
    for (int i = 0; i < c.d; ++i) c.omega = std::min(c.omega, c.lw.row(i).sum());
  }
  return c;
}

/// cost_i = sum_l D_il u_l(y) + Q_i. Fixed summation order.
inline void costs_at(const StepContext& c, const Matrix& D, const Point& x, const Point& y,
                     const double* uy, double* out) {
  const double t = c.t;
  Point v{0.0, 0.0};
  for (int a = 0; a < c.dim; ++a) v[a] = (x[a] - y[a]) / t;
  std::array<double, kMaxD> la;
  std::array<double, kMaxD> lb;
  const auto& comps = c.sys->components;
  switch (c.quad) {
    case Quadrature::RightEndpoint:
      for (int i = 0; i < c.d; ++i) la[i] = t * comps[i].L(x, v);
      break;
    case Quadrature::Trapezoid:
      for (int l = 0; l < c.d; ++l) lb[l] = comps[l].L(y, v);
      for (int i = 0; i < c.d; ++i) {
        double s = 0.0;
        for (int l = 0; l < c.d; ++l) s += c.lw(i, l) * lb[l];
        la[i] = 0.5 * t * (s + comps[i].L(x, v));
      }
      break;
    case Quadrature::Midpoint: {
      Point m{0.0, 0.0};
      for (int a = 0; a < c.dim; ++a) m[a] = 0.5 * (x[a] + y[a]);
      for (int l = 0; l < c.d; ++l) lb[l] = comps[l].L(m, v);
      for (int i = 0; i < c.d; ++i) {
        double s = 0.0;
        for (int l = 0; l < c.d; ++l) s += c.lw(i, l) * lb[l];
        la[i] = t * s;
      }
      break;
    }
  }
  for (int i = 0; i < c.d; ++i) {
    double s = 0.0;
    for (int l = 0; l < c.d; ++l) s += D(i, l) * uy[l];
    out[i] = s + la[i];
  }
}

/// Datum at lifted lattice nodes. Torus indices wrap; bounded grids keep a
/// padded copy filled through the field's exterior policy.
class Lattice {
 public:
  Lattice(const GridField& u, long pad) : u_(u), n_(u.grid().nodes_per_axis()) {
    const Grid& g = u.grid();
    if (g.periodic() || !u.has_exterior()) {
      pad_ = 0;
      return;
    }
    pad_ = pad;
    const long w = n_ + 2 * pad_;
    const int d = u.d();
    if (g.dim() == 1) {
      ext_.resize(static_cast<std::size_t>(w) * d);
      for (long k = 0; k < w; ++k)
        for (int c = 0; c < d; ++c) ext_[k * d + c] = u.lifted(k - pad_, 0, c);
    } else {
      ext_.resize(static_cast<std::size_t>(w) * w * d);
      for (long k0 = 0; k0 < w; ++k0)
        for (long k1 = 0; k1 < w; ++k1)
          for (int c = 0; c < d; ++c)
            ext_[(k0 * w + k1) * d + c] = u.lifted(k0 - pad_, k1 - pad_, c);
    }
  }

  /// Pointer to d values at lifted index (i0, i1).
  const double* at(long i0, long i1) const {
    const Grid& g = u_.grid();
    const int d = u_.d();
    if (g.periodic()) {
      i0 %= n_;
      if (i0 < 0) i0 += n_;
      if (g.dim() == 2) {
        i1 %= n_;
        if (i1 < 0) i1 += n_;
      }
      return u_.values().data() + g.flat(i0, i1) * d;
    }
    if (pad_ == 0) return u_.values().data() + g.flat(i0, i1) * d;
    const long w = n_ + 2 * pad_;
    if (g.dim() == 1) return ext_.data() + (i0 + pad_) * d;
    return ext_.data() + ((i0 + pad_) * w + (i1 + pad_)) * d;
  }

 private:
  const GridField& u_;
  long n_;
  long pad_ = 0;
  std::vector<double> ext_;
};

struct NodeOutcome {
  bool touched = false;
  double margin = 1.0;
  double gain = 0.0;
};

double velocity_bound_for(const StepContext& c, const GridField& u, const SchemeConfig& cfg) {
  if (cfg.velocity_bound) return *cfg.velocity_bound;
  const double K = lipschitz_estimate(u) * std::sqrt(static_cast<double>(c.dim));
  double M = 0.0;
  for (const auto& comp : c.sys->components) M = std::max(M, comp.velocity_bound(K));
  return M / c.omega;
}

StepResult run_step(const GridField& u, double t, const SystemSpec& sys, const SchemeConfig& cfg,
                    OperatorKind op) {
  cfg.validate();
  SchemeConfig local = cfg;
  local.op = op;
  const StepContext ctx = make_context(sys, t, local);
  const Grid& g = u.grid();
  if (u.d() != ctx.d) throw Error(ErrorCode::ShapeMismatch, "step: field d differs from system d");
  if (g.dim() != ctx.dim) {
    throw Error(ErrorCode::ShapeMismatch, "step: grid dimension differs from system N");
  }
  const double h = g.spacing();
  const double M = velocity_bound_for(ctx, u, cfg);
  const double radius = std::max(cfg.window_multiplier * M * t, 2.0 * h);
  const bool exhaustive = cfg.search == Search::Exhaustive;
  const double search_radius = exhaustive ? 2.0 * radius + 1.0 : radius;
  const long reach = static_cast<long>(std::floor(search_radius / h + 1e-9));
  const Lattice lattice(u, reach + 2);
  const long n = g.nodes_per_axis();
  const bool clip = !g.periodic() && !u.has_exterior();
  const int d = ctx.d;
  const int dim = ctx.dim;
  const std::size_t nodes = g.node_count();
  const double r2 = (search_radius / h) * (search_radius / h) * (1.0 + 1e-12);
  const int sub = cfg.refinement == Refinement::SubGrid ? cfg.subgrid_factor : 1;

  std::vector<double> out(nodes * d);
  std::vector<Point> feet(nodes * d);
  std::vector<std::array<long, 2>> best_nodes(nodes * d);
  std::vector<NodeOutcome> outcome(nodes);

  auto in_box = [&](double s) { return s >= -1e-12 && s <= static_cast<double>(n - 1) + 1e-12; };

  parallel_for(nodes, [&](std::size_t node) {
    const auto idx = g.index(node);
    const Point x = g.point(node);
    const Matrix D = datum_weight(ctx, x);
    std::array<double, kMaxD> best;
    std::array<double, kMaxD> cost;
    std::array<double, kMaxD> uy;
    best.fill(std::numeric_limits<double>::infinity());
    std::array<std::array<long, 2>, kMaxD> arg{};
    std::array<Point, kMaxD> argy{};

    auto consider = [&](long j0, long j1) {
      // j are sub-lattice offsets in units of h / sub.
      Point y{x[0] + static_cast<double>(j0) * h / sub, 0.0};
      const double* uval;
      const long q0 = idx[0] * sub + j0;
      const long q1 = idx[1] * sub + j1;
      if (sub == 1) {
        y[0] = g.coord(idx[0] + j0);
        if (dim == 2) y[1] = g.coord(idx[1] + j1);
        uval = lattice.at(idx[0] + j0, idx[1] + j1);
      } else {
        y[0] = g.origin() + static_cast<double>(q0) * h / sub;
        if (dim == 2) y[1] = g.origin() + static_cast<double>(q1) * h / sub;
        if (q0 % sub == 0 && (dim == 1 || q1 % sub == 0)) {
          uval = lattice.at(q0 / sub, dim == 2 ? q1 / sub : 0);
        } else {
          interpolate_into(u, y, uy.data());
          uval = uy.data();
        }
      }
      costs_at(ctx, D, x, y, uval, cost.data());
      for (int i = 0; i < d; ++i) {
        if (cost[i] < best[i]) {
          best[i] = cost[i];
          arg[i] = {j0, j1};
          argy[i] = y;
        }
      }
    };

    const long reach_sub = reach * sub;
    const double r2_sub = r2 * sub * sub;
    for (long j0 = -reach_sub; j0 <= reach_sub; ++j0) {
      if (clip && !in_box(static_cast<double>(idx[0] * sub + j0) / sub)) continue;
      if (dim == 1) {
        if (static_cast<double>(j0) * j0 > r2_sub) continue;
        consider(j0, 0);
        continue;
      }
      for (long j1 = -reach_sub; j1 <= reach_sub; ++j1) {
        if (static_cast<double>(j0) * j0 + static_cast<double>(j1) * j1 > r2_sub) continue;
        if (clip && !in_box(static_cast<double>(idx[1] * sub + j1) / sub)) continue;
        consider(j0, j1);
      }
    }

    NodeOutcome& oc = outcome[node];
    const bool counted = g.in_core(node);
    for (int i = 0; i < d; ++i) {
      const double dist = std::sqrt(static_cast<double>(arg[i][0]) * arg[i][0] +
                                    static_cast<double>(arg[i][1]) * arg[i][1]) *
                          h / sub;
      if (!exhaustive) {
        bool edge = dist > radius - h;
        if (clip) {
          const double e0 = static_cast<double>(idx[0] * sub + arg[i][0]) / sub;
          edge = edge || e0 <= 0.0 || e0 >= n - 1;
          if (dim == 2) {
            const double e1 = static_cast<double>(idx[1] * sub + arg[i][1]) / sub;
            edge = edge || e1 <= 0.0 || e1 >= n - 1;
          }
        }
        if (edge && counted) oc.touched = true;
        oc.margin = std::min(oc.margin, (radius - dist) / radius);
      }
      best_nodes[node * d + i] = {idx[0] + arg[i][0], idx[1] + arg[i][1]};
    }

    if (cfg.refinement == Refinement::Golden && cfg.refinement_depth > 0) {
      for (int i = 0; i < d; ++i) {
        const Point yb = argy[i];
        auto cost_i = [&](const Point& y) {
          interpolate_into(u, y, uy.data());
          costs_at(ctx, D, x, y, uy.data(), cost.data());
          return cost[i];
        };
        auto usable = [&](double lo, double hi, int axis) {
          if (!clip) return true;
          const double a = (lo - g.origin()) / h;
          const double b = (hi - g.origin()) / h;
          (void)axis;
          return in_box(a) && in_box(b);
        };
        double refined = best[i];
        Point refined_y = yb;
        const int depth = cfg.refinement_depth;
        for (int s0 = 0; s0 < 2; ++s0) {
          const double lo0 = s0 == 0 ? yb[0] - h : yb[0];
          const double hi0 = lo0 + h;
          if (!usable(lo0, hi0, 0)) continue;
          if (dim == 1) {
            const SearchResult r =
                golden_min([&](double s) { return cost_i({s, 0.0}); }, lo0, hi0, depth);
            if (r.value < refined) {
              refined = r.value;
              refined_y = {r.arg, 0.0};
            }
            continue;
          }
          for (int s1 = 0; s1 < 2; ++s1) {
            const double lo1 = s1 == 0 ? yb[1] - h : yb[1];
            const double hi1 = lo1 + h;
            if (!usable(lo1, hi1, 1)) continue;
            auto inner = [&](double s) {
              return golden_min([&](double q) { return cost_i({s, q}); }, lo1, hi1, depth);
            };
            const SearchResult r =
                golden_min([&](double s) { return inner(s).value; }, lo0, hi0, depth);
            if (r.value < refined) {
              const SearchResult q = inner(r.arg);
              refined = q.value;
              refined_y = {r.arg, q.arg};
            }
          }
        }
        if (refined < best[i]) {
          oc.gain = std::max(oc.gain, best[i] - refined);
          best[i] = refined;
          argy[i] = refined_y;
        }
      }
    }

    for (int i = 0; i < d; ++i) {
      out[node * d + i] = best[i];
      feet[node * d + i] = argy[i];
    }
  });

  StepResult res{u.with_values(std::move(out), std::string(to_string(op)) + " step t=" +
                                                   format_number(t)),
                 std::move(feet), std::move(best_nodes)};
  res.velocity_bound = M;
  res.window_radius = search_radius;
  for (const auto& oc : outcome) {
    if (oc.touched) ++res.touch_count;
    res.min_edge_margin = std::min(res.min_edge_margin, oc.margin);
    res.max_refinement_gain = std::max(res.max_refinement_gain, oc.gain);
  }
  res.boundary_touched = res.touch_count > 0;
  if (res.boundary_touched && cfg.fail_on_boundary_touch) {
    throw Error(ErrorCode::WindowBoundaryTouched,
                "step: argmin on the search-window edge at " + std::to_string(res.touch_count) +
                    " node(s); velocity bound M = " + format_number(M) + " too small");
  }
  return res;
}

}  // namespace

StepResult twisted_step(const GridField& u, double t, const SystemSpec& sys,
                        const SchemeConfig& cfg) {
  return run_step(u, t, sys, cfg, OperatorKind::Twisted);
}

StepResult alt_exp_step(const GridField& u, double t, const SystemSpec& sys,
                        const SchemeConfig& cfg) {
  return run_step(u, t, sys, cfg, OperatorKind::ExpAtEndpoint);
}

StepResult alt_lin_step(const GridField& u, double t, const SystemSpec& sys,
                        const SchemeConfig& cfg) {
  return run_step(u, t, sys, cfg, OperatorKind::Linearized);
}

StepResult operator_step(const GridField& u, double t, const SystemSpec& sys,
                         const SchemeConfig& cfg) {
  return run_step(u, t, sys, cfg, cfg.op);
}

void foot_costs(const GridField& u, const Point& x, const Point& y, double t,
                const SystemSpec& sys, const SchemeConfig& cfg, std::span<double> out) {
  const StepContext ctx = make_context(sys, t, cfg);
  if (out.size() < static_cast<std::size_t>(ctx.d)) {
    throw Error(ErrorCode::ShapeMismatch, "foot_costs: output span too small");
  }
  std::array<double, kMaxD> uy;
  interpolate_into(u, y, uy.data());
  costs_at(ctx, datum_weight(ctx, x), x, y, uy.data(), out.data());
}

double window_radius(const GridField& u, double t, const SystemSpec& sys,
                     const SchemeConfig& cfg) {
  const StepContext ctx = make_context(sys, t, cfg);
  return std::max(cfg.window_multiplier * velocity_bound_for(ctx, u, cfg) * t,
                  2.0 * u.grid().spacing());
}

namespace {

void log_step(IterationLog* log, const StepResult& r) {
  if (!log) return;
  ++log->steps;
  log->touches += r.touch_count;
  log->min_edge_margin = std::min(log->min_edge_margin, r.min_edge_margin);
  log->max_velocity_bound = std::max(log->max_velocity_bound, r.velocity_bound);
}

}  // namespace

GridField iterate_dyadic(const GridField& u, double t, int n, const SystemSpec& sys,
                         const SchemeConfig& cfg, IterationLog* log) {
  if (n < 0 || n > cfg.n_max) {
    throw Error(ErrorCode::InvalidArgument,
                "iterate_dyadic: n = " + std::to_string(n) + " outside [0, n_max]");
  }
  const double step = std::ldexp(t, -n);
  GridField cur = u;
  const long count = 1L << n;
  for (long k = 0; k < count; ++k) {
    StepResult r = operator_step(cur, step, sys, cfg);
    log_step(log, r);
    cur = std::move(r.output);
  }
  return cur;
}

GridField iterate_partition(const GridField& u, std::span<const double> times,
                            const SystemSpec& sys, const SchemeConfig& cfg, IterationLog* log) {
  if (times.empty()) throw Error(ErrorCode::InvalidArgument, "iterate_partition: empty partition");
  for (double s : times) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "iterate_partition: times must be > 0");
  }
  GridField cur = u;
  for (double s : times) {
    StepResult r = operator_step(cur, s, sys, cfg);
    log_step(log, r);
    cur = std::move(r.output);
  }
  return cur;
}

std::vector<double> wn_partition(double t, double T, int n) {
  if (!(t > 0.0) || !(T > 0.0) || n < 0 || n > 30) {
    throw Error(ErrorCode::InvalidArgument, "wn_partition: need t > 0, T > 0, 0 <= n <= 30");
  }
  const double delta = std::ldexp(T, -n);
  const double q = t / delta;
  long k = static_cast<long>(std::ceil(q - 1e-12 * std::max(1.0, q))) - 1;
  if (k < 0) k = 0;
  if (k > (1L << 24)) throw Error(ErrorCode::InvalidArgument, "wn_partition: too many steps");
  double s = t - static_cast<double>(k) * delta;
  if (s > delta * (1.0 + 1e-12)) {
    ++k;
    s = t - static_cast<double>(k) * delta;
  }
  std::vector<double> times(static_cast<std::size_t>(k), delta);
  times.push_back(s);
  return times;
}

double tol_split(const GridField& u, const SchemeConfig& cfg) {
  return cfg.tolerance_factor * u.grid().spacing() * (1.0 + lipschitz_estimate(u));
}

std::vector<ConsistencyRow> consistency_probe(const AnalyticField& phi, const SystemSpec& sys,
                                              const Grid& grid,
                                              std::span<const double> t_sequence,
                                              const SchemeConfig& cfg) {
  if (!phi.value || !phi.gradient || phi.d != sys.d()) {
    throw Error(ErrorCode::InvalidArgument, "consistency_probe: Phi needs d values and gradients");
  }
  GridField f = GridField::sample(grid, phi.d, phi.value, "test function");
  if (!grid.periodic()) f = f.with_exterior(phi.value);
  const int d = phi.d;
  // H(x, D Phi) + B Phi at every node, independent of t.
  std::vector<double> generator(grid.node_count() * d);
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    const Point x = grid.point(node);
    const Matrix b = sys.coupling_at(x);
    for (int i = 0; i < d; ++i) {
      double bphi = 0.0;
      for (int l = 0; l < d; ++l) bphi += b(i, l) * f(node, l);
      generator[node * d + i] = sys.components[i].H(x, phi.gradient(x, i)) + bphi;
    }
  }
  std::vector<ConsistencyRow> rows;
  for (double t : t_sequence) {
    const StepResult r = operator_step(f, t, sys, cfg);
    double worst = 0.0;
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
      if (!grid.in_core(node)) continue;
      for (int i = 0; i < d; ++i) {
        const double res = (r.output(node, i) - f(node, i)) / t + generator[node * d + i];
        worst = std::max(worst, std::abs(res));
      }
    }
    rows.push_back({t, worst});
  }
  return rows;
}

}  // namespace wchj

#include "wchj/reference.hpp"

#include <algorithm>
#include <cmath>

#include "wchj/error.hpp"
#include "wchj/parallel.hpp"

namespace wchj {

namespace {

/// Sampled sup_x ||D_x B(x)||_inf for a coupling field, 0 for a matrix.
double coupling_gradient_bound(const SystemSpec& sys) {
  if (sys.constant_coupling()) return 0.0;
  const auto& field = std::get<CouplingField>(sys.coupling);
  const double delta = 1e-5;
  double m = 0.0;
  const int samples = 256;
  for (int s = 0; s < samples; ++s) {
    for (int a = 0; a < sys.space_dim(); ++a) {
      Point x{(s + 0.5) / samples, sys.space_dim() == 2 ? (s * 0.618034 - std::floor(s * 0.618034)) : 0.0};
      Point lo = x, hi = x;
      lo[a] -= delta;
      hi[a] += delta;
      const Matrix diff = (field.raw_at(hi) - field.raw_at(lo)) / (2.0 * delta);
      m = std::max(m, diff.cwiseAbs().rowwise().sum().maxCoeff());
    }
  }
  return m;
}

double slope_range(const GridField& u0, double T, const SystemSpec& sys) {
  const double n = static_cast<double>(sys.space_dim());
  double dv = 0.0;
  for (const auto& c : sys.components) dv = std::max(dv, c.potential_gradient_bound);
  const double b = sys.coupling_norm_bound();
  const double growth =
      coupling_gradient_bound(sys) * u0.sup_norm() * std::exp(b * T) * T;
  return std::sqrt(n) * lipschitz_estimate(u0) + T * dv + growth;
}

}  // namespace

double lf_alpha(const GridField& u0, double T, const SystemSpec& sys) {
  const double P = slope_range(u0, T, sys);
  double a = 0.0;
  for (const auto& c : sys.components) a = std::max(a, c.dHdp_bound(P));
  return a;
}

ReferenceRun lf_solve(const GridField& u0, double T, const SystemSpec& sys, double cfl,
                      const LfOptions& opt) {
  sys.validate();
  if (!(cfl > 0.0) || cfl > kCflLimit) {
    throw Error(ErrorCode::CflViolation,
                "lf_solve: CFL ratio " + format_number(cfl) + " outside (0, 0.9]");
  }
  if (!(T >= 0.0)) throw Error(ErrorCode::NegativeTime, "lf_solve: T must be >= 0");
  if (u0.d() != sys.d() || u0.grid().dim() != sys.space_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "lf_solve: field does not match the system");
  }
  const Grid& g = u0.grid();
  const int dim = g.dim();
  const int d = u0.d();
  const double h = g.spacing();
  const long n = g.nodes_per_axis();
  const bool adaptive = !opt.alpha && opt.adaptive_alpha;
  const double alpha0 = opt.alpha ? *opt.alpha : adaptive ? 0.0 : lf_alpha(u0, T, sys);
  if (!(alpha0 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lf_solve: alpha must be >= 0");
  const double bnorm = sys.coupling_norm_bound();

  ReferenceRun run{u0, 0.0, 0.0, 0, 0.0, {}};
  if (T == 0.0) {
    run.series.push_back({0.0, u0.sup_norm()});
    return run;
  }
  // Uniform steps for a fixed alpha.
  long fixed_steps = 0;
  double fixed_dt = 0.0;
  if (!adaptive) {
    const double rate = dim * alpha0 / h + bnorm;
    fixed_steps = std::max<long>(opt.min_steps, static_cast<long>(std::ceil(T * rate / cfl)));
    fixed_dt = T / static_cast<double>(fixed_steps);
    while (fixed_dt * rate > cfl) {
      ++fixed_steps;
      fixed_dt = T / static_cast<double>(fixed_steps);
    }
  }
  const double max_dt = T / static_cast<double>(std::max<long>(1, opt.min_steps));

  // A priori stability envelope used as the blow-up guard.
  const double P = slope_range(u0, T, sys);
  double hbound = 0.0;
  for (const auto& c : sys.components) {
    hbound = std::max(hbound, c.h_zero_sup + P * c.dHdp_bound(P));
  }
  const double u0sup = u0.sup_norm();
  const double envelope =
      2.0 * (u0sup + T * (hbound + bnorm * u0sup * std::exp(bnorm * T))) + 1e-9;

  const std::size_t nodes = g.node_count();
  std::vector<Matrix> coupling(sys.constant_coupling() ? 1 : nodes);
  if (sys.constant_coupling()) {
    coupling[0] = sys.matrix().entries();
  } else {
    for (std::size_t k = 0; k < nodes; ++k) coupling[k] = sys.coupling_at(g.point(k));
  }

  std::vector<double> cur(u0.values().begin(), u0.values().end());
  std::vector<double> next(cur.size());

  // Neighbor value along an axis; ghosts extend the two outermost nodes linearly.
  auto value = [&](const std::vector<double>& u, long i0, long i1, int c) -> double {
    if (g.periodic()) {
      i0 = ((i0 % n) + n) % n;
      i1 = dim == 2 ? ((i1 % n) + n) % n : 0;
      return u[g.flat(i0, i1) * d + c];
    }
    auto at = [&](long a, long b) { return u[g.flat(a, b) * d + c]; };
    if (i0 < 0) return 2.0 * at(0, i1) - at(1, i1);
    if (i0 >= n) return 2.0 * at(n - 1, i1) - at(n - 2, i1);
    if (dim == 2 && i1 < 0) return 2.0 * at(i0, 0) - at(i0, 1);
    if (dim == 2 && i1 >= n) return 2.0 * at(i0, n - 1) - at(i0, n - 2);
    return at(i0, i1);
  };

  // Largest one-sided difference quotient, a bound for every slope the
  // stencil sees (ghosts repeat the edge slopes).
  auto max_slope = [&](const std::vector<double>& u) {
    double m = 0.0;
    for (std::size_t node = 0; node < nodes; ++node) {
      const auto idx = g.index(node);
      for (int a = 0; a < dim; ++a) {
        const long p0 = a == 0 ? idx[0] + 1 : idx[0];
        const long p1 = a == 1 ? idx[1] + 1 : idx[1];
        if (!g.periodic() && (p0 >= n || p1 >= n)) continue;
        for (int c = 0; c < d; ++c) {
          m = std::max(m, std::abs(value(u, p0, p1, c) - u[node * d + c]));
        }
      }
    }
    return std::sqrt(static_cast<double>(dim)) * m / h;
  };

  double now = 0.0;
  for (long step = 0;; ++step) {
    if (!adaptive && step == fixed_steps) break;
    if (adaptive && now >= T) break;
    double alpha = alpha0;
    double dt = fixed_dt;
    if (adaptive) {
      const double P = max_slope(cur);
      alpha = 0.0;
      for (const auto& c : sys.components) alpha = std::max(alpha, c.dHdp_bound(P));
      alpha *= opt.alpha_safety;
      const double rate = dim * alpha / h + bnorm;
      dt = rate > 0.0 ? std::min(max_dt, cfl / rate) : max_dt;
      if (now + dt >= T * (1.0 - 1e-14)) {
        dt = T - now;
        now = T;
      } else {
        now += dt;
      }
    }
    run.alpha = std::max(run.alpha, alpha);
    run.dt = std::max(run.dt, dt);
    run.cfl_ratio = std::max(run.cfl_ratio, dt * (dim * alpha / h + bnorm));
    run.steps = step + 1;
    parallel_for(nodes, [&](std::size_t node) {
      const auto idx = g.index(node);
      const Point x = g.point(node);
      const Matrix& b = coupling[sys.constant_coupling() ? 0 : node];
      for (int i = 0; i < d; ++i) {
        const double ui = cur[node * d + i];
        Point pavg{0.0, 0.0};
        double diss = 0.0;
        for (int a = 0; a < dim; ++a) {
          const long p0 = a == 0 ? idx[0] + 1 : idx[0];
          const long p1 = a == 1 ? idx[1] + 1 : idx[1];
          const long m0 = a == 0 ? idx[0] - 1 : idx[0];
          const long m1 = a == 1 ? idx[1] - 1 : idx[1];
          const double up = value(cur, p0, p1, i);
          const double um = value(cur, m0, m1, i);
          const double pp = (up - ui) / h;
          const double pm = (ui - um) / h;
          pavg[a] = 0.5 * (pp + pm);
          diss += 0.5 * alpha * (pp - pm);
        }
        double bu = 0.0;
        for (int j = 0; j < d; ++j) bu += b(i, j) * cur[node * d + j];
        const double hnum = sys.components[i].H(x, pavg) - diss;
        next[node * d + i] = ui - dt * (hnum + bu);
      }
    });
    cur.swap(next);
    double sup = 0.0;
    for (double v : cur) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFinite, "lf_solve: non-finite value at step " +
                                              std::to_string(step + 1));
      }
      sup = std::max(sup, std::abs(v));
    }
    if (sup > envelope) {
      throw Error(ErrorCode::BlowUp, "lf_solve: sup norm " + format_number(sup) +
                                         " left the stability envelope " +
                                         format_number(envelope));
    }
    const double time = adaptive ? now : fixed_dt * static_cast<double>(step + 1);
    const bool last = adaptive ? now >= T : step + 1 == fixed_steps;
    if (last || (opt.record_every > 0 && (step + 1) % opt.record_every == 0)) {
      run.series.push_back({last ? T : time, sup});
    }
  }
  run.final_field = u0.with_values(std::move(cur), "reference T=" + format_number(T));
  return run;
}

std::vector<GridField> lf_trajectory(const GridField& u0, std::span<const double> times,
                                     const SystemSpec& sys, double cfl, const LfOptions& opt) {
  std::vector<GridField> out;
  GridField cur = u0;
  double now = 0.0;
  LfOptions local = opt;
  if (!local.alpha && !local.adaptive_alpha && !times.empty()) local.alpha = lf_alpha(u0, times.back(), sys);
  for (double t : times) {
    if (t < now) throw Error(ErrorCode::InvalidArgument, "lf_trajectory: times must increase");
    if (t > now) {
      cur = lf_solve(cur, t - now, sys, cfl, local).final_field;
      now = t;
    }
    out.push_back(cur);
  }
  return out;
}

std::array<double, 2> appendix_exact_W(double t, const Point& x, const Point& p, int dim) {
  const double px = dot(p, x, dim);
  const double p2 = dot(p, p, dim);
  const double e = std::exp(-2.0 * t);
  const double a = 1.0 - e;
  const double b = 1.0 + e;
  return {0.5 * px * a - t * p2 / 8.0 * a * a, 0.5 * px * b - t * p2 / 8.0 * b * b};
}

std::array<double, 2> appendix_residual(double t, const Point& p, int dim) {
  const double r = 0.5 * t * dot(p, p, dim) * std::exp(-4.0 * t);
  return {r, -r};
}

double hopf_lax_affine(const Point& p, double H_value, double t, const Point& x, int dim) {
  return -t * H_value + dot(p, x, dim);
}

}  // namespace wchj

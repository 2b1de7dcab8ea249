#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wchj/grid.hpp"
#include "wchj/lagrangian.hpp"

namespace wchj {

/// Largest admissible CFL ratio dt * (N alpha / h + max_i sum_j |b_ij|).
inline constexpr double kCflLimit = 0.9;

struct LfOptions {
  /// Fixed dissipation coefficient with uniform steps. When absent, alpha is
  /// re-derived before every step from the current discrete slopes
  /// (adaptive, the default) or once from the a priori slope range.
  std::optional<double> alpha;
  bool adaptive_alpha = true;
  /// Adaptive mode: alpha_k = safety * max_i |dH_i/dp| over |p| <= slope_k.
  double alpha_safety = 1.1;
  /// Forces at least this many time steps.
  long min_steps = 1;
  /// Snapshot every k steps into ReferenceRun::series (0 = final only).
  long record_every = 0;
};

struct LfSample {
  double time = 0.0;
  double sup_norm = 0.0;
};

struct ReferenceRun {
  GridField final_field;
  /// Largest step, largest CFL ratio and largest alpha used.
  double dt = 0.0;
  double cfl_ratio = 0.0;
  long steps = 0;
  double alpha = 0.0;
  /// (time, sup norm) after every recorded step, plus the end state.
  std::vector<LfSample> series;
};

/// Explicit global Lax-Friedrichs marching of
///   d/dt u_i + H_i(x, D u_i) + sum_j b_ij(x) u_j = 0
/// up to time T. Bounded grids use linearly extrapolated ghost nodes.
/// Throws Error(CflViolation) if cfl is not in (0, 0.9] and Error(BlowUp)
/// when the sup norm leaves the a priori stability envelope.
ReferenceRun lf_solve(const GridField& u0, double T, const SystemSpec& sys,
                      double cfl = kCflLimit, const LfOptions& opt = {});

/// Fields at the given increasing times (the first may be 0), marching
/// each interval with lf_solve.
std::vector<GridField> lf_trajectory(const GridField& u0, std::span<const double> times,
                                     const SystemSpec& sys, double cfl = kCflLimit,
                                     const LfOptions& opt = {});

/// A priori dissipation coefficient for (u0, T, sys) from the slope range
/// sqrt(N) Lip(u0) + T sup|DV| + sup|DB| ||u0|| e^{||B|| T} T.
double lf_alpha(const GridField& u0, double T, const SystemSpec& sys);

/// Closed form of W(t)u0 for B = [[1,-1],[-1,1]], L_1 = L_2 = |v|^2/2 and
/// u0 = (0, <p, x>).
std::array<double, 2> appendix_exact_W(double t, const Point& x, const Point& p, int dim = 1);

/// (t |p|^2 e^{-4t} / 2) * (1, -1): what the Hamilton-Jacobi operator leaves
/// when applied to appendix_exact_W.
std::array<double, 2> appendix_residual(double t, const Point& p, int dim = 1);

/// -t H(p) + <p, x>, the solution for affine data <p, x> and a single
/// x-independent Hamiltonian.
double hopf_lax_affine(const Point& p, double H_value, double t, const Point& x, int dim = 1);

}  // namespace wchj

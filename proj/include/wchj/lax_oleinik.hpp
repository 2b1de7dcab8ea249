#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wchj/grid.hpp"
#include "wchj/lagrangian.hpp"

namespace wchj {

/// twisted: e^{-tB} on the datum and e^{sB} inside the action integral.
/// exp_at_endpoint: e^{-tB(x)} on the datum, plain action.
/// linearized: (Id - tB(x)) on the datum, plain action.
enum class OperatorKind { Twisted, ExpAtEndpoint, Linearized };
enum class Quadrature { RightEndpoint, Trapezoid, Midpoint };
/// How candidate feet between grid nodes are explored.
enum class Refinement { None, Golden, SubGrid };
/// Window: lattice nodes with |x - y| <= multiplier * M * t.
/// Exhaustive: every lattice node within 2 * radius + 1 (all torus feet and
/// their nearby lifts), used to certify the window.
enum class Search { Window, Exhaustive };

const char* to_string(OperatorKind k);
const char* to_string(Quadrature q);
const char* to_string(Refinement r);

struct SchemeConfig {
  OperatorKind op = OperatorKind::Twisted;
  Quadrature quadrature = Quadrature::Trapezoid;
  double window_multiplier = 1.5;
  Refinement refinement = Refinement::Golden;
  int refinement_depth = 20;
  int subgrid_factor = 4;
  Search search = Search::Window;
  double t_max = 0.5;
  int n_max = 12;
  /// Overrides the catalog velocity bound M when set.
  std::optional<double> velocity_bound;
  /// tol_split = tolerance_factor * h * (1 + Lip).
  double tolerance_factor = 10.0;
  bool fail_on_boundary_touch = true;

  void validate() const;
};

struct StepResult {
  GridField output;
  /// Argmin foot per node and component, index node * d + comp.
  std::vector<Point> feet;
  /// Lifted lattice index of the best node before refinement.
  std::vector<std::array<long, 2>> best_node;
  bool boundary_touched = false;
  std::size_t touch_count = 0;
  double velocity_bound = 0.0;
  double window_radius = 0.0;
  /// min over nodes/components of (radius - |x - y*|) / radius.
  double min_edge_margin = 1.0;
  /// Largest decrease achieved by refinement over the best node value.
  double max_refinement_gain = 0.0;
};

/// One step of the twisted Lax-Oleinik operator W(t) with straight
/// characteristics. Requires a constant coupling matrix.
StepResult twisted_step(const GridField& u, double t, const SystemSpec& sys,
                        const SchemeConfig& cfg);
/// One step of the operator with weight e^{-t B(x)} on the datum.
StepResult alt_exp_step(const GridField& u, double t, const SystemSpec& sys,
                        const SchemeConfig& cfg);
/// One step of the operator with weight Id - t B(x). Throws
/// Error(StepTooLarge) unless t * sup_x ||B(x)||_inf <= 1.
StepResult alt_lin_step(const GridField& u, double t, const SystemSpec& sys,
                        const SchemeConfig& cfg);
/// Dispatches on cfg.op.
StepResult operator_step(const GridField& u, double t, const SystemSpec& sys,
                         const SchemeConfig& cfg);

/// Cost of the straight foot y (lifted coordinates) for node x, every
/// component: [D u(y)]_i + Q_i(x, y, t), with D and the quadrature weights of
/// the operator cfg.op. The single-step minimizations evaluate exactly this.
void foot_costs(const GridField& u, const Point& x, const Point& y, double t,
                const SystemSpec& sys, const SchemeConfig& cfg, std::span<double> out);

/// Window radius multiplier * M * t (at least 2h) used by a step on u.
double window_radius(const GridField& u, double t, const SystemSpec& sys,
                     const SchemeConfig& cfg);

struct IterationLog {
  std::size_t steps = 0;
  std::size_t touches = 0;
  double min_edge_margin = 1.0;
  double max_velocity_bound = 0.0;
};

/// 2^n steps of size t / 2^n.
GridField iterate_dyadic(const GridField& u, double t, int n, const SystemSpec& sys,
                         const SchemeConfig& cfg, IterationLog* log = nullptr);
/// Applies steps of the given sizes, times[0] first.
GridField iterate_partition(const GridField& u, std::span<const double> times,
                            const SystemSpec& sys, const SchemeConfig& cfg,
                            IterationLog* log = nullptr);

/// Step sizes realizing W_n(t) = W(s) o W(T/2^n)^k with t = k T/2^n + s,
/// 0 < s <= T/2^n; the W(s) factor is last.
std::vector<double> wn_partition(double t, double T, int n);

/// Default inequality tolerance: factor * h * (1 + Lip(u)).
double tol_split(const GridField& u, const SchemeConfig& cfg);

/// A C^1 test function with its gradient, given analytically.
struct AnalyticField {
  int d = 1;
  std::function<double(const Point& x, int comp)> value;
  std::function<Point(const Point& x, int comp)> gradient;
};

struct ConsistencyRow {
  double t = 0.0;
  /// sup over nodes/components of (W(t)Phi - Phi)/t + H(x, DPhi) + B Phi.
  double residual = 0.0;
};

/// Consistency residuals on grid for the operator selected by cfg.op, one
/// row per entry of t_sequence.
std::vector<ConsistencyRow> consistency_probe(const AnalyticField& phi, const SystemSpec& sys,
                                              const Grid& grid,
                                              std::span<const double> t_sequence,
                                              const SchemeConfig& cfg);

}  // namespace wchj

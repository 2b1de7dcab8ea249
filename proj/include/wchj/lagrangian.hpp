#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "wchj/coupling.hpp"
#include "wchj/types.hpp"

namespace wchj {

enum class Regularity { C1StrictlyConvex, LipschitzConvex };

const char* to_string(Regularity r);

/// Growth gauge theta(q) = scale * q^2 / 2 together with the constants of the
/// lower bound L >= theta(|v|) - c0 and derivative bound A. The constants are
/// metadata: they are checked by sampling but never consumed by a scheme.
struct NagumoDescriptor {
  std::string family = "quadratic";
  double scale = 1.0;
  double c0 = 1.0;
  double A = 1.0;

  double theta(double q) const { return 0.5 * scale * q * q; }
};

/// One component Lagrangian L(x, v) and its Hamiltonian H(x, p), autonomous.
struct LagrangianSpec {
  using PhaseFn = std::function<double(const Point& x, const Point& w)>;

  std::string name;
  int dim = 1;
  PhaseFn L;
  PhaseFn H;
  /// Gradient of H in p, used by the reference solver and residual audits.
  std::function<Point(const Point& x, const Point& p)> dH;

  /// Bound on |velocity| of minimizers for data with Lipschitz constant K.
  std::function<double(double K)> velocity_bound;
  /// sup over |p| <= P and x of |D_p H(x, p)|.
  std::function<double(double P)> dHdp_bound;
  /// sup_x |H(x, 0)|.
  double h_zero_sup = 0.0;
  /// sup_x |D_x V| for entries with a potential, else 0.
  double potential_gradient_bound = 0.0;
  bool x_independent = true;
  Regularity regularity = Regularity::C1StrictlyConvex;
  NagumoDescriptor growth;
  /// Marks velocities where L is not twice differentiable ((L2) checks are
  /// only required almost everywhere for Lipschitz-convex entries).
  std::function<bool(const Point& v)> near_kink;
};

namespace catalog {

/// L = |v|^2 / 2, H = |p|^2 / 2.
LagrangianSpec quadratic(int dim = 1);
/// L = |v|^2 / 2 + V(x), H = |p|^2 / 2 - V(x), V(x) = a * sum_k cos(2 pi f x_k).
LagrangianSpec quadratic_potential(int dim = 1, double amplitude = 1.0,
                                   int frequency = 1);
/// L = <S v, v> / 2 with S symmetric positive definite (row-major 2x2, or
/// S = s00 in one dimension); H = <S^{-1} p, p> / 2.
LagrangianSpec anisotropic(int dim, const std::array<double, 4>& sigma);
/// L = max(|v| - 1, 0)^2, H = |p| + |p|^2 / 4. Convex, flat on |v| <= 1.
LagrangianSpec lipschitz_convex(int dim = 1);

/// Names accepted by make_entry.
std::vector<std::string> names();

}  // namespace catalog

struct SystemSpec {
  std::vector<LagrangianSpec> components;
  std::variant<CouplingMatrix, CouplingField> coupling;
  std::string label;

  int d() const { return static_cast<int>(components.size()); }
  int space_dim() const { return components.empty() ? 1 : components.front().dim; }
  bool constant_coupling() const {
    return std::holds_alternative<CouplingMatrix>(coupling);
  }
  /// Throws when coupling is a field.
  const CouplingMatrix& matrix() const;
  /// B(x) for either kind of coupling, as a raw dense matrix.
  Matrix coupling_at(const Point& x) const;
  /// sup_x ||B(x)||_inf.
  double coupling_norm_bound() const;
  bool coupling_is_zero() const;

  /// Throws Error(InvalidArgument/ShapeMismatch) if components disagree on
  /// dimension or the coupling size differs from d.
  void validate() const;
};

std::vector<double> eval_L_vec(const SystemSpec& sys, const Point& x, const Point& v);
std::vector<double> eval_H_vec(const SystemSpec& sys, const Point& x, const Point& p);

struct LegendreReport {
  double max_gap = 0.0;
  Point worst_x{};
  Point worst_p{};
  int samples = 0;
  bool passed(double tol = 1e-6) const { return max_gap <= tol; }
};

/// Compares H(x, p) with sup_v <p, v> - L(x, v) computed by golden-section
/// (nested for N = 2) over |v_k| <= M_search, on seeded samples |p| <= p_radius.
/// Throws Error(SearchWindowTooSmall) if a maximizer sits on the search edge.
LegendreReport legendre_check(const LagrangianSpec& spec, int sample_count,
                              double p_radius, std::uint64_t seed = 0);

struct GrowthReport {
  int samples = 0;
  /// Largest theta(|v|) - c0 - L(x, v) seen away from kinks (<= 0 passes).
  double lower_bound_violation = 0.0;
  /// Largest L(mid) - (L(a) + L(b)) / 2 seen (<= tol passes).
  double convexity_violation = 0.0;
  int kink_samples = 0;
  bool passed(double tol = 1e-12) const {
    return lower_bound_violation <= tol && convexity_violation <= tol;
  }
};

/// Sampled (L2) lower bound on |v| <= 2M(K) and midpoint convexity.
GrowthReport growth_check(const LagrangianSpec& spec, int sample_count,
                          double data_lipschitz, std::uint64_t seed = 0);

}  // namespace wchj

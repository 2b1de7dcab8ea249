#include "wchj/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wchj/error.hpp"
#include "wchj/search.hpp"

namespace wchj {

const char* to_string(Regularity r) {
  return r == Regularity::C1StrictlyConvex ? "C1-strictly-convex" : "Lipschitz-convex";
}

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxSpaceDim) {
    throw Error(ErrorCode::InvalidArgument, "catalog entries support N = 1 or 2");
  }
}

}  // namespace

namespace catalog {

LagrangianSpec quadratic(int dim) {
  check_dim(dim);
  LagrangianSpec s;
  s.name = "quadratic";
  s.dim = dim;
  s.L = [dim](const Point&, const Point& v) { return 0.5 * dot(v, v, dim); };
  s.H = [dim](const Point&, const Point& p) { return 0.5 * dot(p, p, dim); };
  s.dH = [](const Point&, const Point& p) { return p; };
  s.velocity_bound = [](double K) { return 4.0 * (K + 1.0); };
  s.dHdp_bound = [](double P) { return P; };
  s.growth = {"quadratic", 1.0, 1.0, 4.0};
  return s;
}

LagrangianSpec quadratic_potential(int dim, double amplitude, int frequency) {
  check_dim(dim);
  const double w = 2.0 * kPi * frequency;
  auto potential = [dim, amplitude, w](const Point& x) {
    double v = 0.0;
    for (int k = 0; k < dim; ++k) v += std::cos(w * x[k]);
    return amplitude * v;
  };
  LagrangianSpec s;
  s.name = "quadratic-potential";
  s.dim = dim;
  s.L = [dim, potential](const Point& x, const Point& v) {
    return 0.5 * dot(v, v, dim) + potential(x);
  };
  s.H = [dim, potential](const Point& x, const Point& p) {
    return 0.5 * dot(p, p, dim) - potential(x);
  };
  s.dH = [](const Point&, const Point& p) { return p; };
  const double dv = std::abs(amplitude) * w * std::sqrt(static_cast<double>(dim));
  s.potential_gradient_bound = dv;
  s.velocity_bound = [dv](double K) { return 4.0 * (K + dv + 1.0); };
  s.dHdp_bound = [](double P) { return P; };
  s.h_zero_sup = std::abs(amplitude) * dim;
  s.x_independent = amplitude == 0.0;
  s.growth = {"quadratic", 1.0, std::abs(amplitude) * dim + 1.0, 4.0 + dv};
  return s;
}

LagrangianSpec anisotropic(int dim, const std::array<double, 4>& sigma) {
  check_dim(dim);
  // Row-major S = [[s00, s01], [s10, s11]]; only s00 is used when dim = 1.
  const double s00 = sigma[0];
  const double s01 = dim == 2 ? sigma[1] : 0.0;
  const double s11 = dim == 2 ? sigma[3] : 1.0;
  if (dim == 2 && sigma[1] != sigma[2]) {
    throw Error(ErrorCode::InvalidArgument, "anisotropic: S must be symmetric");
  }
  const double det = s00 * s11 - s01 * s01;
  if (!(s00 > 0.0) || !(det > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "anisotropic: S must be positive definite");
  }
  const double tr = s00 + s11;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lambda_min = dim == 1 ? s00 : 0.5 * tr - disc;
  // S^{-1}
  const double i00 = s11 / det, i01 = -s01 / det, i11 = s00 / det;

  LagrangianSpec s;
  s.name = "anisotropic";
  s.dim = dim;
  if (dim == 1) {
    s.L = [s00](const Point&, const Point& v) { return 0.5 * s00 * v[0] * v[0]; };
    s.H = [s00](const Point&, const Point& p) { return 0.5 * p[0] * p[0] / s00; };
    s.dH = [s00](const Point&, const Point& p) { return Point{p[0] / s00, 0.0}; };
  } else {
    s.L = [s00, s01, s11](const Point&, const Point& v) {
      return 0.5 * (s00 * v[0] * v[0] + 2.0 * s01 * v[0] * v[1] + s11 * v[1] * v[1]);
    };
    s.H = [i00, i01, i11](const Point&, const Point& p) {
      return 0.5 * (i00 * p[0] * p[0] + 2.0 * i01 * p[0] * p[1] + i11 * p[1] * p[1]);
    };
    s.dH = [i00, i01, i11](const Point&, const Point& p) {
      return Point{i00 * p[0] + i01 * p[1], i01 * p[0] + i11 * p[1]};
    };
  }
  s.velocity_bound = [lambda_min](double K) { return 4.0 * (K / lambda_min + 1.0); };
  s.dHdp_bound = [lambda_min](double P) { return P / lambda_min; };
  s.growth = {"quadratic", lambda_min, 1.0, 4.0 * std::max(1.0, tr)};
  return s;
}

LagrangianSpec lipschitz_convex(int dim) {
  check_dim(dim);
  LagrangianSpec s;
  s.name = "lipschitz-convex";
  s.dim = dim;
  s.L = [dim](const Point&, const Point& v) {
    const double e = std::max(norm(v, dim) - 1.0, 0.0);
    return e * e;
  };
  s.H = [dim](const Point&, const Point& p) {
    const double r = norm(p, dim);
    return r + 0.25 * r * r;
  };
  s.dH = [dim](const Point&, const Point& p) {
    const double r = norm(p, dim);
    if (r == 0.0) return Point{0.0, 0.0};
    const double g = (1.0 + 0.5 * r) / r;
    return Point{g * p[0], g * p[1]};
  };
  s.velocity_bound = [](double K) { return 4.0 * (0.5 * K + 2.0); };
  s.dHdp_bound = [](double P) { return 1.0 + 0.5 * P; };
  s.regularity = Regularity::LipschitzConvex;
  // max(q - 1, 0)^2 >= q^2 / 2 - 1 for all q >= 0.
  s.growth = {"quadratic", 1.0, 1.0, 4.0};
  s.near_kink = [dim](const Point& v) { return std::abs(norm(v, dim) - 1.0) < 1e-6; };
  return s;
}

std::vector<std::string> names() {
  return {"quadratic", "quadratic-potential", "anisotropic", "lipschitz-convex"};
}

}  // namespace catalog

const CouplingMatrix& SystemSpec::matrix() const {
  if (!constant_coupling()) {
    throw Error(ErrorCode::InvalidArgument,
                "this operator needs a constant coupling matrix, got a coupling field");
  }
  return std::get<CouplingMatrix>(coupling);
}

Matrix SystemSpec::coupling_at(const Point& x) const {
  if (constant_coupling()) return std::get<CouplingMatrix>(coupling).entries();
  return std::get<CouplingField>(coupling).raw_at(x);
}

double SystemSpec::coupling_norm_bound() const {
  if (constant_coupling()) return std::get<CouplingMatrix>(coupling).norm_inf();
  return std::get<CouplingField>(coupling).norm_inf_bound();
}

bool SystemSpec::coupling_is_zero() const {
  return constant_coupling() && std::get<CouplingMatrix>(coupling).is_zero();
}

void SystemSpec::validate() const {
  if (components.empty()) {
    throw Error(ErrorCode::InvalidArgument, "system needs at least one component");
  }
  const int n = components.front().dim;
  for (const auto& c : components) {
    if (c.dim != n) {
      throw Error(ErrorCode::ShapeMismatch, "all components must share the spatial dimension");
    }
    if (!c.L || !c.H) {
      throw Error(ErrorCode::InvalidArgument, "component '" + c.name + "' lacks L or H");
    }
  }
  const int cd = constant_coupling() ? std::get<CouplingMatrix>(coupling).dim()
                                     : std::get<CouplingField>(coupling).dim();
  if (cd != d()) {
    throw Error(ErrorCode::ShapeMismatch,
                "coupling dimension " + std::to_string(cd) + " differs from d = " +
                    std::to_string(d()));
  }
}

namespace {

void require_finite(const Point& a, const Point& b, int dim) {
  for (int k = 0; k < dim; ++k) {
    if (!std::isfinite(a[k]) || !std::isfinite(b[k])) {
      throw Error(ErrorCode::NonFinite, "non-finite argument");
    }
  }
}

}  // namespace

std::vector<double> eval_L_vec(const SystemSpec& sys, const Point& x, const Point& v) {
  require_finite(x, v, sys.space_dim());
  std::vector<double> out;
  out.reserve(sys.components.size());
  for (const auto& c : sys.components) out.push_back(c.L(x, v));
  return out;
}

std::vector<double> eval_H_vec(const SystemSpec& sys, const Point& x, const Point& p) {
  require_finite(x, p, sys.space_dim());
  std::vector<double> out;
  out.reserve(sys.components.size());
  for (const auto& c : sys.components) out.push_back(c.H(x, p));
  return out;
}

namespace {

constexpr int kConjugateIterations = 120;

/// sup_v <p, v> - L(x, v) over the box |v_k| <= m. Returns the maximizer.
std::pair<double, Point> conjugate(const LagrangianSpec& spec, const Point& x,
                                   const Point& p, double m) {
  if (spec.dim == 1) {
    auto r = golden_max(
        [&](double v) { return p[0] * v - spec.L(x, Point{v, 0.0}); }, -m, m,
        kConjugateIterations);
    return {r.value, Point{r.arg, 0.0}};
  }
  // The inner maximum of a jointly concave function is concave in v_1.
  constexpr int kNested = 80;
  auto inner = [&](double v1) {
    return golden_max(
        [&](double v2) {
          const Point v{v1, v2};
          return p[0] * v1 + p[1] * v2 - spec.L(x, v);
        },
        -m, m, kNested);
  };
  auto outer = golden_max([&](double v1) { return inner(v1).value; }, -m, m, kNested);
  return {outer.value, Point{outer.arg, inner(outer.arg).arg}};
}

}  // namespace

LegendreReport legendre_check(const LagrangianSpec& spec, int sample_count,
                              double p_radius, std::uint64_t seed) {
  if (!spec.L || !spec.H) {
    throw Error(ErrorCode::InvalidArgument, "legendre_check needs both L and H");
  }
  if (sample_count <= 0 || !(p_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "legendre_check: bad sample parameters");
  }
  const double m = spec.velocity_bound ? spec.velocity_bound(p_radius) : 4.0 * (p_radius + 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LegendreReport report;
  for (int s = 0; s < sample_count; ++s) {
    Point x{0.0, 0.0}, p{0.0, 0.0};
    for (int k = 0; k < spec.dim; ++k) x[k] = unit(rng);
    // First sample sits on the sphere |p| = p_radius.
    const double r = s == 0 ? p_radius : p_radius * unit(rng);
    if (spec.dim == 1) {
      p[0] = unit(rng) < 0.5 ? -r : r;
    } else {
      const double a = 2.0 * kPi * unit(rng);
      p = {r * std::cos(a), r * std::sin(a)};
    }
    const auto [value, argmax] = conjugate(spec, x, p, m);
    for (int k = 0; k < spec.dim; ++k) {
      if (std::abs(std::abs(argmax[k]) - m) < 1e-6 * m) {
        throw Error(ErrorCode::SearchWindowTooSmall,
                    "legendre_check: maximizer touches the search box |v| <= " +
                        std::to_string(m) + " for entry '" + spec.name + "'");
      }
    }
    const double gap = std::abs(value - spec.H(x, p));
    if (s == 0 || gap > report.max_gap) {
      report.max_gap = gap;
      report.worst_x = x;
      report.worst_p = p;
    }
    ++report.samples;
  }
  return report;
}

GrowthReport growth_check(const LagrangianSpec& spec, int sample_count,
                          double data_lipschitz, std::uint64_t seed) {
  const double m = spec.velocity_bound ? spec.velocity_bound(data_lipschitz) : 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> vel(-2.0 * m, 2.0 * m);
  GrowthReport report;
  for (int s = 0; s < sample_count; ++s) {
    Point x{0.0, 0.0}, v{0.0, 0.0}, a{0.0, 0.0}, b{0.0, 0.0}, mid{0.0, 0.0};
    for (int k = 0; k < spec.dim; ++k) {
      x[k] = unit(rng);
      v[k] = vel(rng);
      a[k] = vel(rng);
      b[k] = vel(rng);
      mid[k] = 0.5 * (a[k] + b[k]);
    }
    if (norm(v, spec.dim) > 2.0 * m) continue;
    ++report.samples;
    const bool kink = spec.near_kink && spec.near_kink(v);
    if (kink) {
      ++report.kink_samples;
    } else {
      const double lower = spec.growth.theta(norm(v, spec.dim)) - spec.growth.c0;
      report.lower_bound_violation =
          std::max(report.lower_bound_violation, lower - spec.L(x, v));
    }
    const double chord = 0.5 * (spec.L(x, a) + spec.L(x, b));
    const double conv = spec.L(x, mid) - chord;
    report.convexity_violation =
        std::max(report.convexity_violation, conv - 1e-12 * (1.0 + std::abs(chord)));
  }
  return report;
}

}  // namespace wchj

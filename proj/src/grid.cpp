#include "wchj/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wchj/error.hpp"

namespace wchj {

Grid Grid::torus(int dim, int m) {
  if (dim < 1 || dim > kMaxSpaceDim) {
    throw Error(ErrorCode::InvalidArgument, "grid dimension must be 1 or 2");
  }
  if (m < 4) throw Error(ErrorCode::InvalidArgument, "torus grid needs m >= 4 nodes per axis");
  Grid g;
  g.kind_ = Kind::Torus;
  g.dim_ = dim;
  g.n_ = m;
  g.h_ = 1.0 / m;
  return g;
}

Grid Grid::bounded(int dim, double radius, double spacing, double margin) {
  if (dim < 1 || dim > kMaxSpaceDim) {
    throw Error(ErrorCode::InvalidArgument, "grid dimension must be 1 or 2");
  }
  if (!(radius > 0.0) || !(spacing > 0.0) || !(margin >= 0.0) || !(margin < radius)) {
    throw Error(ErrorCode::InvalidArgument, "bounded grid needs R > 0, h > 0, 0 <= margin < R");
  }
  const double intervals = 2.0 * radius / spacing;
  const long k = std::lround(intervals);
  if (k < 3 || std::abs(intervals - k) > 1e-9 * intervals) {
    throw Error(ErrorCode::InvalidArgument, "bounded grid: 2R/h must be an integer >= 3");
  }
  Grid g;
  g.kind_ = Kind::Bounded;
  g.dim_ = dim;
  g.n_ = static_cast<int>(k) + 1;
  g.h_ = 2.0 * radius / static_cast<double>(k);
  g.origin_ = -radius;
  g.radius_ = radius;
  g.margin_ = margin;
  return g;
}

std::size_t Grid::node_count() const {
  return dim_ == 1 ? static_cast<std::size_t>(n_)
                   : static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
}

std::array<long, 2> Grid::index(std::size_t flat) const {
  if (dim_ == 1) return {static_cast<long>(flat), 0};
  return {static_cast<long>(flat / n_), static_cast<long>(flat % n_)};
}

std::size_t Grid::flat(long i0, long i1) const {
  return dim_ == 1 ? static_cast<std::size_t>(i0)
                   : static_cast<std::size_t>(i0) * n_ + static_cast<std::size_t>(i1);
}

Point Grid::point(std::size_t flat_index) const {
  const auto idx = index(flat_index);
  Point p{coord(idx[0]), 0.0};
  if (dim_ == 2) p[1] = coord(idx[1]);
  return p;
}

bool Grid::in_core(const Point& x) const {
  if (periodic()) return true;
  const double lim = radius_ - margin_ + 1e-12 * radius_;
  for (int a = 0; a < dim_; ++a)
    if (std::abs(x[a]) > lim) return false;
  return true;
}

bool Grid::in_core(std::size_t flat_index) const { return in_core(point(flat_index)); }

bool Grid::contains(const Point& x) const {
  if (periodic()) return true;
  const double lim = radius_ * (1.0 + 1e-12);
  for (int a = 0; a < dim_; ++a)
    if (!(std::abs(x[a]) <= lim)) return false;
  return true;
}

Grid Grid::refined(int factor) const {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "refinement factor must be >= 1");
  if (periodic()) return torus(dim_, n_ * factor);
  return bounded(dim_, radius_, h_ / factor, margin_);
}

bool Grid::operator==(const Grid& o) const {
  return kind_ == o.kind_ && dim_ == o.dim_ && n_ == o.n_ && h_ == o.h_ &&
         origin_ == o.origin_ && margin_ == o.margin_;
}

std::string Grid::describe() const {
  std::ostringstream os;
  if (periodic()) {
    os << "torus N=" << dim_ << " m=" << n_;
  } else {
    os << "box N=" << dim_ << " R=" << radius_ << " h=" << h_ << " margin=" << margin_;
  }
  return os.str();
}

GridField::GridField(Grid grid, int d, std::vector<double> values, std::string provenance)
    : grid_(std::move(grid)), d_(d), values_(std::move(values)), provenance_(std::move(provenance)) {
  if (d <= 0 || values_.size() != grid_.node_count() * static_cast<std::size_t>(d)) {
    throw Error(ErrorCode::ShapeMismatch, "grid field: value count does not match grid x d");
  }
  for (double v : values_)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "grid field: non-finite value");
}

GridField GridField::sample(const Grid& grid, int d, const Sampler& f, std::string provenance) {
  std::vector<double> v(grid.node_count() * d);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const Point x = grid.point(n);
    for (int c = 0; c < d; ++c) v[n * d + c] = f(x, c);
  }
  return GridField(grid, d, std::move(v), std::move(provenance));
}

GridField GridField::with_exterior(Exterior ext) const {
  GridField copy = *this;
  copy.exterior_ = ext ? std::make_shared<const Exterior>(std::move(ext)) : nullptr;
  copy.extrapolate_ = false;
  return copy;
}

GridField GridField::with_linear_extrapolation() const {
  GridField copy = *this;
  copy.exterior_ = nullptr;
  copy.extrapolate_ = !grid_.periodic();
  return copy;
}

double GridField::lifted(long i0, long i1, int comp) const {
  const long n = grid_.nodes_per_axis();
  if (grid_.periodic()) {
    i0 %= n;
    if (i0 < 0) i0 += n;
    if (grid_.dim() == 2) {
      i1 %= n;
      if (i1 < 0) i1 += n;
    }
    return (*this)(grid_.flat(i0, i1), comp);
  }
  const bool inside = i0 >= 0 && i0 < n && (grid_.dim() == 1 || (i1 >= 0 && i1 < n));
  if (inside) return (*this)(grid_.flat(i0, i1), comp);
  if (extrapolate_) {
    if (i0 < 0) {
      const double a = lifted(0, i1, comp);
      return a + static_cast<double>(i0) * (lifted(1, i1, comp) - a);
    }
    if (i0 >= n) {
      const double a = lifted(n - 1, i1, comp);
      return a + static_cast<double>(i0 - n + 1) * (a - lifted(n - 2, i1, comp));
    }
    if (i1 < 0) {
      const double a = lifted(i0, 0, comp);
      return a + static_cast<double>(i1) * (lifted(i0, 1, comp) - a);
    }
    const double a = lifted(i0, n - 1, comp);
    return a + static_cast<double>(i1 - n + 1) * (a - lifted(i0, n - 2, comp));
  }
  if (!exterior_) {
    throw Error(ErrorCode::OutOfDomain, "grid field: lifted index outside the box and no exterior");
  }
  Point x{grid_.coord(i0), grid_.dim() == 2 ? grid_.coord(i1) : 0.0};
  return (*exterior_)(x, comp);
}

double GridField::lipschitz() const { return lipschitz_estimate(*this); }

double GridField::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

GridField GridField::shifted(double k) const {
  std::vector<double> v = values_;
  for (double& x : v) x += k;
  GridField out(grid_, d_, std::move(v), provenance_ + " + const");
  out.extrapolate_ = extrapolate_;
  return out;
}

GridField GridField::with_values(std::vector<double> values, std::string provenance) const {
  GridField out(grid_, d_, std::move(values), std::move(provenance));
  out.extrapolate_ = extrapolate_;
  return out;
}

namespace {

/// Splits a scaled coordinate into cell index and fraction, snapping values
/// within rounding of a node onto it so node evaluations are exact.
inline void locate(double s, long& cell, double& frac) {
  const double r = std::round(s);
  if (std::abs(s - r) <= 1e-12 * std::max(1.0, std::abs(s))) {
    cell = static_cast<long>(r);
    frac = 0.0;
    return;
  }
  const double f = std::floor(s);
  cell = static_cast<long>(f);
  frac = s - f;
}

}  // namespace

void interpolate_into(const GridField& f, const Point& x, double* out) {
  const Grid& g = f.grid();
  const int d = f.d();
  if (!g.periodic() && !g.contains(x) && !f.extrapolates()) {
    const auto* ext = f.exterior();
    if (!ext) {
      throw Error(ErrorCode::OutOfDomain, "interpolate: point outside the bounded grid");
    }
    for (int c = 0; c < d; ++c) out[c] = (*ext)(x, c);
    return;
  }
  const long n = g.nodes_per_axis();
  long c0 = 0, c1 = 0;
  double f0 = 0.0, f1 = 0.0;
  locate((x[0] - g.origin()) / g.spacing(), c0, f0);
  if (g.dim() == 2) locate((x[1] - g.origin()) / g.spacing(), c1, f1);
  if (!g.periodic() && g.contains(x)) {
    // Inside the box a coordinate at or past the last node sits on it.
    if (c0 >= n - 1) { c0 = n - 1; f0 = 0.0; }
    if (c0 < 0) { c0 = 0; f0 = 0.0; }
    if (g.dim() == 2) {
      if (c1 >= n - 1) { c1 = n - 1; f1 = 0.0; }
      if (c1 < 0) { c1 = 0; f1 = 0.0; }
    }
  }
  if (g.dim() == 1) {
    for (int c = 0; c < d; ++c) {
      const double a = f.lifted(c0, 0, c);
      out[c] = f0 == 0.0 ? a : a + f0 * (f.lifted(c0 + 1, 0, c) - a);
    }
    return;
  }
  for (int c = 0; c < d; ++c) {
    const double a = f.lifted(c0, c1, c);
    if (f0 == 0.0 && f1 == 0.0) {
      out[c] = a;
    } else if (f1 == 0.0) {
      out[c] = (1.0 - f0) * a + f0 * f.lifted(c0 + 1, c1, c);
    } else if (f0 == 0.0) {
      out[c] = (1.0 - f1) * a + f1 * f.lifted(c0, c1 + 1, c);
    } else {
      const double b = f.lifted(c0 + 1, c1, c);
      const double e = f.lifted(c0, c1 + 1, c);
      const double q = f.lifted(c0 + 1, c1 + 1, c);
      out[c] = (1.0 - f0) * (1.0 - f1) * a + f0 * (1.0 - f1) * b + (1.0 - f0) * f1 * e +
               f0 * f1 * q;
    }
  }
}

std::vector<double> interpolate(const GridField& f, const Point& x) {
  for (int a = 0; a < f.grid().dim(); ++a)
    if (!std::isfinite(x[a])) throw Error(ErrorCode::NonFinite, "interpolate: non-finite point");
  std::vector<double> out(f.d());
  interpolate_into(f, x, out.data());
  return out;
}

namespace {

void require_same_shape(const GridField& f, const GridField& g) {
  if (!(f.grid() == g.grid()) || f.d() != g.d()) {
    throw Error(ErrorCode::ShapeMismatch, "fields live on different grids or have different d");
  }
}

template <class Op>
double reduce_nodes(const GridField& f, const GridField& g, Region region, Op op) {
  require_same_shape(f, g);
  double m = -std::numeric_limits<double>::infinity();
  bool any = false;
  const std::size_t nodes = f.grid().node_count();
  for (std::size_t n = 0; n < nodes; ++n) {
    if (region == Region::Core && !f.grid().in_core(n)) continue;
    for (int c = 0; c < f.d(); ++c) {
      m = std::max(m, op(f(n, c), g(n, c)));
      any = true;
    }
  }
  return any ? m : 0.0;
}

}  // namespace

double sup_diff(const GridField& f, const GridField& g, Region region) {
  return reduce_nodes(f, g, region, [](double a, double b) { return std::abs(a - b); });
}

double max_excess(const GridField& f, const GridField& g, Region region) {
  return reduce_nodes(f, g, region, [](double a, double b) { return a - b; });
}

double lipschitz_estimate(const GridField& f) {
  const Grid& g = f.grid();
  const long n = g.nodes_per_axis();
  double m = 0.0;
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const auto idx = g.index(node);
    for (int a = 0; a < g.dim(); ++a) {
      if (!g.periodic() && idx[a] + 1 >= n) continue;
      long j0 = idx[0], j1 = idx[1];
      (a == 0 ? j0 : j1) += 1;
      if (g.periodic()) {
        j0 %= n;
        j1 %= n;
      }
      const std::size_t other = g.flat(j0, j1);
      for (int c = 0; c < f.d(); ++c) {
        m = std::max(m, std::abs(f(other, c) - f(node, c)) / g.spacing());
      }
    }
  }
  return m;
}

GridField restrict_to(const GridField& fine, const Grid& coarse) {
  const Grid& g = fine.grid();
  if (g.kind() != coarse.kind() || g.dim() != coarse.dim() || g.origin() != coarse.origin()) {
    throw Error(ErrorCode::ShapeMismatch, "restrict_to: incompatible grids");
  }
  const double ratio = coarse.spacing() / g.spacing();
  const long factor = std::lround(ratio);
  if (factor < 1 || std::abs(ratio - factor) > 1e-9 * ratio) {
    throw Error(ErrorCode::ShapeMismatch, "restrict_to: spacing ratio must be an integer");
  }
  std::vector<double> v(coarse.node_count() * fine.d());
  for (std::size_t n = 0; n < coarse.node_count(); ++n) {
    const auto idx = coarse.index(n);
    const std::size_t fn = g.flat(idx[0] * factor, coarse.dim() == 2 ? idx[1] * factor : 0);
    for (int c = 0; c < fine.d(); ++c) v[n * fine.d() + c] = fine(fn, c);
  }
  return GridField(coarse, fine.d(), std::move(v), fine.provenance() + " (restricted)");
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

void write_csv(const GridField& f, std::ostream& os, const std::vector<std::string>& names) {
  const int dim = f.grid().dim();
  if (dim == 1) {
    os << "x";
  } else {
    os << "x1,x2";
  }
  for (int c = 0; c < f.d(); ++c) {
    os << ',' << (c < static_cast<int>(names.size()) ? names[c] : "u" + std::to_string(c + 1));
  }
  os << '\n';
  for (std::size_t n = 0; n < f.grid().node_count(); ++n) {
    const Point x = f.grid().point(n);
    os << format_number(x[0]);
    if (dim == 2) os << ',' << format_number(x[1]);
    for (int c = 0; c < f.d(); ++c) os << ',' << format_number(f(n, c));
    os << '\n';
  }
}

void write_csv(const GridField& f, const std::string& path, const std::vector<std::string>& names) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
  write_csv(f, os, names);
}

GridField read_csv(const Grid& grid, std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::InvalidArgument, "read_csv: empty input");
  const int columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  const int d = columns - grid.dim();
  if (d <= 0) throw Error(ErrorCode::ShapeMismatch, "read_csv: no component columns");
  std::vector<double> values;
  values.reserve(grid.node_count() * d);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int col = 0; col < columns; ++col) {
      double v = 0.0;
      auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "read_csv: bad number");
      if (col >= grid.dim()) values.push_back(v);
      p = r.ptr;
      if (p < end && *p == ',') ++p;
    }
    ++rows;
  }
  if (rows != grid.node_count()) {
    throw Error(ErrorCode::ShapeMismatch, "read_csv: row count does not match the grid");
  }
  return GridField(grid, d, std::move(values), "read from csv");
}

}  // namespace wchj

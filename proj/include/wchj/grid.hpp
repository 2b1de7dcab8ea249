#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wchj/types.hpp"

namespace wchj {

/// Uniform grid on the torus T^N = [0,1)^N (nodes k*h, h = 1/m) or on the
/// box [-R, R]^N (nodes -R + k*h, k = 0..2R/h) with a core region
/// [-R + margin, R - margin]^N where errors are measured.
class Grid {
 public:
  enum class Kind { Torus, Bounded };

  /// Throws Error(InvalidArgument) unless dim in {1, 2} and m >= 4.
  static Grid torus(int dim, int m);
  /// 2R/h must be an integer (to 1e-9 relative); margin in [0, R).
  static Grid bounded(int dim, double radius, double spacing, double margin);

  Kind kind() const { return kind_; }
  bool periodic() const { return kind_ == Kind::Torus; }
  int dim() const { return dim_; }
  int nodes_per_axis() const { return n_; }
  double spacing() const { return h_; }
  double origin() const { return origin_; }
  double radius() const { return radius_; }
  double margin() const { return margin_; }
  std::size_t node_count() const;

  /// Coordinate of (possibly lifted / out-of-range) index k along an axis.
  double coord(long k) const { return origin_ + static_cast<double>(k) * h_; }
  std::array<long, 2> index(std::size_t flat) const;
  std::size_t flat(long i0, long i1 = 0) const;
  Point point(std::size_t flat) const;
  /// Always true on the torus.
  bool in_core(std::size_t flat) const;
  bool in_core(const Point& x) const;
  bool contains(const Point& x) const;

  /// The same geometry with node spacing divided by factor.
  Grid refined(int factor) const;

  bool operator==(const Grid& o) const;
  std::string describe() const;

 private:
  Grid() = default;

  Kind kind_ = Kind::Torus;
  int dim_ = 1;
  int n_ = 0;
  double h_ = 0.0;
  double origin_ = 0.0;
  double radius_ = 0.0;
  double margin_ = 0.0;
};

/// Values of a function T^N -> R^d (or box -> R^d) at grid nodes, stored
/// node-major: value(node, comp) = values[node * d + comp]. Immutable.
class GridField {
 public:
  /// Values outside a bounded grid. Absent means evaluation there fails.
  using Exterior = std::function<double(const Point& x, int comp)>;
  using Sampler = std::function<double(const Point& x, int comp)>;

  /// Throws Error(ShapeMismatch) on a size mismatch and Error(NonFinite) on
  /// NaN/inf values.
  GridField(Grid grid, int d, std::vector<double> values,
            std::string provenance = "");

  static GridField sample(const Grid& grid, int d, const Sampler& f,
                          std::string provenance = "initial datum");

  const Grid& grid() const { return grid_; }
  int d() const { return d_; }
  double operator()(std::size_t node, int comp) const {
    return values_[node * static_cast<std::size_t>(d_) + comp];
  }
  std::span<const double> values() const { return values_; }
  std::span<const double> node(std::size_t node) const {
    return std::span<const double>(values_).subspan(node * d_, d_);
  }
  const std::string& provenance() const { return provenance_; }

  /// Copy with an exterior function attached (bounded grids only).
  GridField with_exterior(Exterior ext) const;
  /// Copy whose exterior is the affine extrapolation of the two outermost
  /// nodes along each axis. Exact on affine data; inherited by step outputs.
  GridField with_linear_extrapolation() const;
  const Exterior* exterior() const { return exterior_ ? exterior_.get() : nullptr; }
  bool extrapolates() const { return extrapolate_; }
  bool has_exterior() const { return exterior_ != nullptr || extrapolate_; }

  /// Value at lifted node (i0, i1): wrapped on the torus; on a bounded grid
  /// indices outside the box go through the exterior (or throw OutOfDomain).
  double lifted(long i0, long i1, int comp) const;

  double lipschitz() const;
  double sup_norm() const;

  GridField shifted(double k) const;
  GridField with_values(std::vector<double> values, std::string provenance) const;

 private:
  Grid grid_;
  int d_;
  std::vector<double> values_;
  std::string provenance_;
  std::shared_ptr<const Exterior> exterior_;
  bool extrapolate_ = false;
};

/// Periodic (torus) or box multilinear interpolation of every component,
/// written into out[0..d). Exact at nodes and on affine data.
void interpolate_into(const GridField& f, const Point& x, double* out);
std::vector<double> interpolate(const GridField& f, const Point& x);

enum class Region { All, Core };

/// max over nodes (optionally core nodes only) and components of |f - g|.
double sup_diff(const GridField& f, const GridField& g, Region region = Region::All);
/// max over nodes/components of f - g (signed, so <= tol certifies f <= g + tol).
double max_excess(const GridField& f, const GridField& g, Region region = Region::All);

/// max over adjacent node pairs along each axis of |delta f| / h.
double lipschitz_estimate(const GridField& f);

/// Injection of a field onto a coarser grid whose nodes are fine nodes.
GridField restrict_to(const GridField& fine, const Grid& coarse);

/// 12 significant digits, dot decimal separator regardless of locale.
std::string format_number(double v);

/// One row per node: coordinates then components; header "x,u1,..." (N = 1)
/// or "x1,x2,u1,..." (N = 2) unless names are given.
void write_csv(const GridField& f, std::ostream& os,
               const std::vector<std::string>& component_names = {});
void write_csv(const GridField& f, const std::string& path,
               const std::vector<std::string>& component_names = {});
/// Reads a file written by write_csv back onto grid.
GridField read_csv(const Grid& grid, std::istream& is);

}  // namespace wchj

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "wchj/types.hpp"

namespace wchj {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Entry tolerance for computed exponentials (d <= 8 regime).
inline constexpr double kMatrixTolerance = 1e-12;
inline constexpr int kMaxCouplingDim = 64;

/// A d x d matrix with non-positive off-diagonal entries and non-negative row
/// sums. Immutable; only obtainable through validation.
class CouplingMatrix {
 public:
  /// Throws CouplingError naming the first violated condition.
  static CouplingMatrix validate(const Matrix& raw, std::string label = {});

  static CouplingMatrix zero(int d);

  int dim() const { return static_cast<int>(b_.rows()); }
  const Matrix& entries() const { return b_; }
  double operator()(int i, int j) const { return b_(i, j); }
  const std::string& label() const { return label_; }

  /// max_i sum_j |b_ij|, the infinity norm.
  double norm_inf() const;
  bool is_zero() const;
  /// True when B * 1 = 0 up to tol, i.e. e^{-tB} preserves constants.
  bool has_zero_row_sums(double tol = 0.0) const;

 private:
  CouplingMatrix(Matrix b, std::string label)
      : b_(std::move(b)), label_(std::move(label)) {}

  Matrix b_;
  std::string label_;
};

inline CouplingMatrix validate_coupling(const Matrix& raw) {
  return CouplingMatrix::validate(raw);
}

/// e^{-tau B}. Entries are non-negative and each row sum lies in [0, 1].
/// Throws Error(NegativeTime) for tau < 0.
Matrix exp_neg(const CouplingMatrix& b, double tau);

/// exp_neg(b, tau) * v.
Vector exp_neg_apply(const CouplingMatrix& b, double tau, const Vector& v);

/// Memoized e^{-tau B} for a fixed B. Lookups and fills are serialized by a
/// mutex; returned references stay valid for the lifetime of the kernel.
class ExpKernel {
 public:
  explicit ExpKernel(CouplingMatrix base) : base_(std::move(base)) {}

  const CouplingMatrix& base() const { return base_; }
  const Matrix& at(double tau) const;
  std::size_t cached() const;

 private:
  CouplingMatrix base_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::unique_ptr<Matrix>> cache_;
};

/// Space-dependent coupling x -> B(x) on the torus.
class CouplingField {
 public:
  using Evaluator = std::function<Matrix(const Point&)>;

  /// Spot-checks the evaluator on a sample of points (sign structure and
  /// continuity); throws CouplingError or Error(InvalidArgument).
  CouplingField(int d, int space_dim, Evaluator evaluator, std::string name);

  static CouplingField constant(const CouplingMatrix& b, int space_dim = 1);
  /// B(x) = (offset + amplitude * sin(2 pi x_1)) * B0. Valid whenever
  /// offset >= |amplitude|.
  static CouplingField scaled(const CouplingMatrix& b0, double offset,
                              double amplitude, int space_dim = 1);

  int dim() const { return d_; }
  int space_dim() const { return space_dim_; }
  const std::string& name() const { return name_; }

  /// Evaluates and validates B(x).
  CouplingMatrix at(const Point& x) const;
  /// Evaluates B(x) without validation (hot loops; spot-checked at build).
  Matrix raw_at(const Point& x) const { return evaluator_(x); }
  /// sup over a sample of ||B(x)||_inf.
  double norm_inf_bound() const { return norm_bound_; }

 private:
  int d_;
  int space_dim_;
  Evaluator evaluator_;
  std::string name_;
  double norm_bound_ = 0.0;
};

}  // namespace wchj

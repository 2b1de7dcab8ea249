#include "wchj/coupling.hpp"

#include <cmath>
#include <sstream>

#include "wchj/error.hpp"

namespace wchj {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SignViolation: return "SignViolation";
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SearchWindowTooSmall: return "SearchWindowTooSmall";
    case ErrorCode::WindowBoundaryTouched: return "WindowBoundaryTouched";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::InsufficientTimeLevels: return "InsufficientTimeLevels";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

CouplingMatrix CouplingMatrix::validate(const Matrix& raw, std::string label) {
  if (raw.rows() != raw.cols() || raw.rows() == 0) {
    throw CouplingError(ErrorCode::NotSquare, 0, 0,
                        "coupling matrix must be square and non-empty");
  }
  const int d = static_cast<int>(raw.rows());
  if (d > kMaxCouplingDim) {
    throw CouplingError(ErrorCode::DimensionTooLarge, d, d,
                        "coupling dimension " + std::to_string(d) +
                            " exceeds the cap of " +
                            std::to_string(kMaxCouplingDim));
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!std::isfinite(raw(i, j))) {
        throw CouplingError(ErrorCode::NonFinite, i + 1, j + 1,
                            "non-finite coupling entry at (" +
                                std::to_string(i + 1) + "," +
                                std::to_string(j + 1) + ")");
      }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j && raw(i, j) > 0.0) {
        std::ostringstream msg;
        msg << "SignViolation(" << i + 1 << "," << j + 1
            << "): off-diagonal entry " << raw(i, j) << " is positive";
        throw CouplingError(ErrorCode::SignViolation, i + 1, j + 1, msg.str());
      }
    }
    if (raw.row(i).sum() < 0.0) {
      std::ostringstream msg;
      msg << "RowSumViolation(" << i + 1 << "): row sum " << raw.row(i).sum()
          << " is negative";
      throw CouplingError(ErrorCode::RowSumViolation, i + 1, 0, msg.str());
    }
  }
  return CouplingMatrix(raw, std::move(label));
}

CouplingMatrix CouplingMatrix::zero(int d) {
  return validate(Matrix::Zero(d, d), "zero");
}

double CouplingMatrix::norm_inf() const {
  return b_.cwiseAbs().rowwise().sum().maxCoeff();
}

bool CouplingMatrix::is_zero() const { return (b_.array() == 0.0).all(); }

bool CouplingMatrix::has_zero_row_sums(double tol) const {
  return (b_.rowwise().sum().cwiseAbs().array() <= tol).all();
}

Matrix exp_neg(const CouplingMatrix& b, double tau) {
  if (!(tau >= 0.0)) {
    throw Error(ErrorCode::NegativeTime,
                "exp_neg requires tau >= 0, got " + std::to_string(tau));
  }
  const int d = b.dim();
  if (tau == 0.0) return Matrix::Identity(d, d);

  // -tau B = -tau c I + tau (c I - B) with c = max_i b_ii. The second
  // term is entrywise non-negative, so the Taylor core and the squarings
  // only ever add non-negative numbers.
  const double c = b.entries().diagonal().maxCoeff();
  Matrix a = tau * (c * Matrix::Identity(d, d) - b.entries());
  const double a_norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (a_norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  a *= scale;

  constexpr int kTaylorDegree = 18;
  const Matrix id = Matrix::Identity(d, d);
  Matrix p = id;
  for (int k = kTaylorDegree; k >= 1; --k) p = id + (a * p) / k;
  p *= std::exp(-tau * c * scale);
  for (int s = 0; s < squarings; ++s) p = (p * p).eval();

  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (p(i, j) < 0.0 && p(i, j) >= -kMatrixTolerance) p(i, j) = 0.0;
  return p;
}

Vector exp_neg_apply(const CouplingMatrix& b, double tau, const Vector& v) {
  if (v.size() != b.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "exp_neg_apply: vector size mismatch");
  }
  if (!v.allFinite()) throw Error(ErrorCode::NonFinite, "exp_neg_apply: non-finite vector");
  return exp_neg(b, tau) * v;
}

const Matrix& ExpKernel::at(double tau) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(tau);
  if (it == cache_.end()) {
    it = cache_.emplace(tau, std::make_unique<Matrix>(exp_neg(base_, tau))).first;
  }
  return *it->second;
}

std::size_t ExpKernel::cached() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

CouplingField::CouplingField(int d, int space_dim, Evaluator evaluator,
                             std::string name)
    : d_(d),
      space_dim_(space_dim),
      evaluator_(std::move(evaluator)),
      name_(std::move(name)) {
  if (d <= 0 || d > kMaxCouplingDim) {
    throw Error(ErrorCode::DimensionTooLarge, "coupling field dimension out of range");
  }
  if (space_dim < 1 || space_dim > kMaxSpaceDim) {
    throw Error(ErrorCode::InvalidArgument, "coupling field space dimension must be 1 or 2");
  }
  constexpr int kSamples = 256;
  constexpr double kProbe = 1e-7;
  for (int k = 0; k <= kSamples; ++k) {
    Point x{static_cast<double>(k) / kSamples, 0.0};
    if (space_dim == 2) x[1] = x[0];
    const CouplingMatrix b = at(x);
    norm_bound_ = std::max(norm_bound_, b.norm_inf());
    Point nearby = x;
    for (int a = 0; a < space_dim; ++a) nearby[a] += kProbe;
    const double jump = (evaluator_(nearby) - b.entries()).cwiseAbs().maxCoeff();
    if (jump > 1e-3 * (1.0 + b.norm_inf())) {
      throw Error(ErrorCode::InvalidArgument,
                  "coupling field '" + name_ + "' looks discontinuous near x = " +
                      std::to_string(x[0]));
    }
  }
}

CouplingMatrix CouplingField::at(const Point& x) const {
  Matrix m = evaluator_(x);
  if (m.rows() != d_ || m.cols() != d_) {
    throw Error(ErrorCode::ShapeMismatch, "coupling field returned a matrix of the wrong size");
  }
  return CouplingMatrix::validate(m, name_);
}

CouplingField CouplingField::constant(const CouplingMatrix& b, int space_dim) {
  Matrix m = b.entries();
  return CouplingField(b.dim(), space_dim, [m](const Point&) { return m; },
                       "constant");
}

CouplingField CouplingField::scaled(const CouplingMatrix& b0, double offset,
                                    double amplitude, int space_dim) {
  Matrix m = b0.entries();
  return CouplingField(
      b0.dim(), space_dim,
      [m, offset, amplitude](const Point& x) -> Matrix {
        return (offset + amplitude * std::sin(2.0 * kPi * x[0])) * m;
      },
      "scaled");
}

}  // namespace wchj

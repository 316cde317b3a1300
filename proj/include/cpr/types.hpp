#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpr {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Input that violates a documented precondition (shape, range, invariant).
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Certification requested outside the dimensions/fields with a known criterion.
class UnsupportedDimension : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical/data failures discovered while computing. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public DataError {
 public:
  using DataError::DataError;
};

class InconsistentDataError : public DataError {
 public:
  using DataError::DataError;
};

class IllConditionedError : public DataError {
 public:
  using DataError::DataError;
};

/// K x M measurement matrix; column j is the measurement vector v_j.
class CprMatrix {
 public:
  explicit CprMatrix(ComplexMatrix columns);
  static CprMatrix from_real(const RealMatrix& columns);

  Index dim() const { return columns_.rows(); }
  Index count() const { return columns_.cols(); }
  bool real_valued() const { return real_valued_; }

  const ComplexMatrix& columns() const { return columns_; }
  ComplexVector column(Index j) const { return columns_.col(j); }
  RealMatrix real_part() const { return columns_.real(); }

  /// Matrix restricted to the given column indices, in order.
  CprMatrix select_columns(const std::vector<Index>& which) const;

 private:
  ComplexMatrix columns_;
  bool real_valued_ = false;
};

/// The 3 x 6 real frame
///   [ 1 0 0  1  1  0 ]
///   [ 0 1 0 -1  0  1 ]
///   [ 0 0 1  0 -1 -1 ]
/// used throughout as the default measurement matrix.
CprMatrix standard_cpr_matrix();

inline void require_finite(const ComplexVector& x, const char* what) {
  if (!x.allFinite()) throw ValidationError(std::string(what) + ": non-finite entry");
}

}  // namespace cpr

#include "cpr/finite_cpr.hpp"

#include <cmath>
#include <string>

namespace cpr {

CprMatrix::CprMatrix(ComplexMatrix columns) : columns_(std::move(columns)) {
  if (columns_.rows() < 1 || columns_.cols() < 1)
    throw DimensionError("CprMatrix: need K >= 1 and M >= 1");
  if (!columns_.allFinite()) throw ValidationError("CprMatrix: non-finite entry");
  real_valued_ = (columns_.imag().array() == 0.0).all();
}

CprMatrix CprMatrix::from_real(const RealMatrix& columns) {
  return CprMatrix(columns.cast<Complex>());
}

CprMatrix CprMatrix::select_columns(const std::vector<Index>& which) const {
  ComplexMatrix out(dim(), static_cast<Index>(which.size()));
  for (std::size_t j = 0; j < which.size(); ++j) {
    if (which[j] < 0 || which[j] >= count())
      throw DimensionError("select_columns: index out of range");
    out.col(static_cast<Index>(j)) = columns_.col(which[j]);
  }
  return CprMatrix(std::move(out));
}

CprMatrix standard_cpr_matrix() {
  RealMatrix v(3, 6);
  v << 1, 0, 0, 1, 1, 0,
       0, 1, 0, -1, 0, 1,
       0, 0, 1, 0, -1, -1;
  return CprMatrix::from_real(v);
}

RealVector magnitude_measurements(const CprMatrix& V, const ComplexVector& x) {
  if (x.size() != V.dim())
    throw DimensionError("magnitude_measurements: vector has length " + std::to_string(x.size()) +
                         ", matrix has K = " + std::to_string(V.dim()));
  return (V.columns().adjoint() * x).cwiseAbs();
}

namespace {

Eigen::Matrix3d lift2(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  Eigen::Matrix3d m;
  const Eigen::Vector2d* rows[3] = {&a, &b, &c};
  for (int i = 0; i < 3; ++i) {
    const auto& r = *rows[i];
    m(i, 0) = r(0) * r(0);
    m(i, 1) = 2.0 * r(0) * r(1);
    m(i, 2) = r(1) * r(1);
  }
  return m;
}

Eigen::Matrix<double, 6, 6> lift3(std::span<const Eigen::Vector3d> vectors) {
  if (vectors.size() != 6) throw DimensionError("det3_criterion: need exactly six vectors");
  Eigen::Matrix<double, 6, 6> m;
  for (int i = 0; i < 6; ++i) {
    const auto& r = vectors[static_cast<std::size_t>(i)];
    m(i, 0) = r(0) * r(0);
    m(i, 1) = r(1) * r(1);
    m(i, 2) = r(2) * r(2);
    m(i, 3) = 2.0 * r(0) * r(1);
    m(i, 4) = 2.0 * r(0) * r(2);
    m(i, 5) = 2.0 * r(1) * r(2);
  }
  return m;
}

template <typename M>
double row_norm_product(const M& m) {
  double p = 1.0;
  for (Index i = 0; i < m.rows(); ++i) p *= m.row(i).norm();
  return p;
}

constexpr double kRelativeDetThreshold = 1e-9;

// Advances `idx` (strictly increasing, values < n) to the next k-combination.
bool next_combination(std::vector<Index>& idx, Index n) {
  const auto k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[static_cast<std::size_t>(i)] < n - k + i) {
      ++idx[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < k; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

double det2_criterion(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Matrix3d m = lift2(a, b, c);
  // cofactor expansion along the first row
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

double det3_criterion(std::span<const Eigen::Vector3d> vectors) {
  return lift3(vectors).partialPivLu().determinant();
}

bool det2_nonzero(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const double scale = row_norm_product(lift2(a, b, c));
  return scale > 0.0 && std::abs(det2_criterion(a, b, c)) > kRelativeDetThreshold * scale;
}

bool det3_nonzero(std::span<const Eigen::Vector3d> vectors) {
  const auto m = lift3(vectors);
  const double scale = row_norm_product(m);
  return scale > 0.0 && std::abs(m.partialPivLu().determinant()) > kRelativeDetThreshold * scale;
}

CprCertificate certify_cpr_detailed(const CprMatrix& V) {
  if (!V.real_valued())
    throw UnsupportedDimension("certify_cpr: only real measurement matrices have a known criterion");
  const Index K = V.dim();
  const Index M = V.count();
  if (K != 2 && K != 3)
    throw UnsupportedDimension("certify_cpr: criterion known only for K = 2 or K = 3, got K = " +
                               std::to_string(K));
  const Index need = K == 2 ? 3 : 6;
  if (M < need)
    throw ValidationError("certify_cpr: K = " + std::to_string(K) + " needs at least " +
                          std::to_string(need) + " columns, got " + std::to_string(M));

  const RealMatrix re = V.real_part();
  std::vector<Index> idx(static_cast<std::size_t>(need));
  for (Index i = 0; i < need; ++i) idx[static_cast<std::size_t>(i)] = i;

  do {
    if (K == 2) {
      const Eigen::Vector2d a = re.col(idx[0]), b = re.col(idx[1]), c = re.col(idx[2]);
      if (det2_nonzero(a, b, c)) return {true, idx, det2_criterion(a, b, c)};
    } else {
      std::vector<Eigen::Vector3d> cols;
      for (Index j : idx) cols.emplace_back(re.col(j));
      if (det3_nonzero(cols)) return {true, idx, det3_criterion(cols)};
    }
  } while (next_combination(idx, M));
  return {};
}

bool certify_cpr(const CprMatrix& V) { return certify_cpr_detailed(V).does_cpr; }

double cpr_distance(const ComplexVector& x, const ComplexVector& y) {
  if (x.size() != y.size())
    throw DimensionError("cpr_distance: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  // Entrywise on the outer products; the closed form via |<x,y>| cancels badly near zero.
  double plain = 0.0;
  double conjugated = 0.0;
  const Index n = x.size();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Complex xx = x(i) * std::conj(x(j));
      plain += std::norm(xx - y(i) * std::conj(y(j)));
      conjugated += std::norm(xx - std::conj(y(i)) * y(j));
    }
  }
  return std::sqrt(std::min(plain, conjugated));
}

}  // namespace cpr

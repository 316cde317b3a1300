#pragma once

#include <span>
#include <vector>

#include "cpr/types.hpp"

namespace cpr {

/// Entry j is |<x, v_j>| = |sum_k x_k conj(V(k, j))|.
RealVector magnitude_measurements(const CprMatrix& V, const ComplexVector& x);

/// Determinant of the 3x3 quadratic-lift matrix with rows (a1^2, 2 a1 a2, a2^2), ...
/// Nonzero iff a, b, c do conjugate phase retrieval in C^2.
double det2_criterion(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& c);

/// Determinant of the 6x6 lift with rows (a1^2, a2^2, a3^2, 2a1a2, 2a1a3, 2a2a3).
/// Nonzero iff the six vectors do conjugate phase retrieval in C^3.
double det3_criterion(std::span<const Eigen::Vector3d> vectors);

/// Scale-aware "nonzero" test: |det| > 1e-9 * product of the lift's row norms.
bool det2_nonzero(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c);
bool det3_nonzero(std::span<const Eigen::Vector3d> vectors);

struct CprCertificate {
  bool does_cpr = false;
  /// Column subset witnessing CPR (empty when does_cpr is false).
  std::vector<Index> witness;
  double determinant = 0.0;
};

/// Exhaustive search over minimal column subsets (3 for K=2, 6 for K=3).
/// Throws UnsupportedDimension for complex matrices or K outside {2, 3}.
CprCertificate certify_cpr_detailed(const CprMatrix& V);
bool certify_cpr(const CprMatrix& V);

/// min(||xx* - yy*||_F, ||xx* - conj(y)conj(y)*||_F).
double cpr_distance(const ComplexVector& x, const ComplexVector& y);

}  // namespace cpr

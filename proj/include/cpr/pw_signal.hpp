#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "cpr/types.hpp"

namespace cpr {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// sin(pi x)/(pi x) with sinc(0) = 1.
double sinc(double x);
/// d/dx sinc(x); sinc'(0) = 0.
double sinc_derivative(double x);
/// sin(pi x), exactly zero at integers.
double sin_pi(double x);
double cos_pi(double x);

/// Signal in PW_pi stored by its integer samples c_n = f(n), n in [n_min, n_max];
/// f(t) = sum_n c_n sinc(t - n).
class BandlimitedSignal {
 public:
  BandlimitedSignal() = default;
  BandlimitedSignal(int n_min, std::vector<Complex> coefficients);

  /// c_at = 1, all other coefficients zero.
  static BandlimitedSignal delta(int at = 0);

  int n_min() const { return n_min_; }
  int n_max() const { return n_min_ + static_cast<int>(coeffs_.size()) - 1; }
  bool empty() const { return coeffs_.empty(); }
  std::span<const Complex> coefficients() const { return coeffs_; }
  /// Zero outside the stored support.
  Complex coefficient(int n) const;

  Complex operator()(double t) const;

 private:
  int n_min_ = 0;
  std::vector<Complex> coeffs_;
};

Complex evaluate(const BandlimitedSignal& f, double t);
/// f^#(z) = conj(f(conj z)): conjugated coefficients.
BandlimitedSignal sharp(const BandlimitedSignal& f);
Complex derivative(const BandlimitedSignal& f, double t);

/// Shifts b_0..b_{K-1} and the sampling lattice t_n = offset + n * step, all exact.
struct ShiftScheme {
  std::vector<Rational> shifts;
  Rational step{1, 2};
  Rational offset{0};

  /// Throws ValidationError if shifts are empty, repeated, or step <= 0.
  void validate() const;
  double point(std::int64_t n) const { return to_double(offset + step * n); }
};

/// Shifts (0, 1/2, 1) on the half-integer lattice.
ShiftScheme half_step_scheme();

/// (v * f)(t) = sum_k conj(v_k) f(t + b_k).
Complex structured_convolution(const ComplexVector& v, const ShiftScheme& scheme,
                               const BandlimitedSignal& f, double t);

/// Samples s_n = g(n/2), n in [n_min, n_max], of some g in PW_2pi; evaluates
/// g(t) = sum_n s_n sinc(2t - n).
struct HalfGridSamples {
  int n_min = 0;
  std::vector<double> values;

  int n_max() const { return n_min + static_cast<int>(values.size()) - 1; }
  double evaluate(double t) const;
};

/// Samples a magnitude-squared source |h|^2 (h in PW_pi) on the half grid.
HalfGridSamples magnitude_squared_coeffs(const std::function<double(double)>& squared_magnitude,
                                         int n_min, int n_max);
HalfGridSamples magnitude_squared_coeffs(const BandlimitedSignal& h, int n_min, int n_max);

/// Evaluates the half-grid series at arbitrary points and returns the squared
/// magnitudes there. Values in [-clamp_tolerance, 0) are round-off and clamp to
/// 0; anything more negative throws InconsistentDataError.
std::vector<double> resample_magnitudes(const HalfGridSamples& squared, std::span<const double> points,
                                        double clamp_tolerance = 1e-10);
/// Same on the shifted half grid n/2 - beta, n in [n_min, n_max].
std::vector<double> resample_magnitudes(const HalfGridSamples& squared, double beta, int n_min,
                                        int n_max, double clamp_tolerance = 1e-10);

/// (|f(t_n)|, |f'(t_n)|) for each grid point.
std::vector<std::pair<double, double>> conjugate_sampling_map(const BandlimitedSignal& f,
                                                              std::span<const double> grid);

/// (theta')^2 for f = r e^{i theta}, from f, f', f^# and (f^#)'.
/// Throws DataError when |f(t)|^2 <= 1e-12.
double theta_prime_squared(const BandlimitedSignal& f, double t);

/// Density 1/g of the group Z(b_0, ..., b_{K-1}) = gZ.
Rational shift_group_density(const ShiftScheme& scheme);

}  // namespace cpr

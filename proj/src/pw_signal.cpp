#include "cpr/pw_signal.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace cpr {

namespace {
constexpr double kPi = std::numbers::pi;

inline double parity(std::int64_t n) { return (n & 1) ? -1.0 : 1.0; }

inline bool is_integer(double t) { return std::nearbyint(t) == t; }
}  // namespace

double sin_pi(double x) {
  const double r = x - 2.0 * std::nearbyint(0.5 * x);  // r in [-1, 1], exact
  if (r > 0.5) return std::sin(kPi * (1.0 - r));
  if (r < -0.5) return -std::sin(kPi * (1.0 + r));
  return std::sin(kPi * r);
}

double cos_pi(double x) {
  const double r = x - 2.0 * std::nearbyint(0.5 * x);
  return sin_pi(0.5 - std::abs(r));
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return sin_pi(x) / (kPi * x);
}

double sinc_derivative(double x) {
  if (std::abs(x) < 1e-3) {
    const double p2 = kPi * kPi;
    const double x2 = x * x;
    return x * (-p2 / 3.0 + x2 * (p2 * p2 / 30.0 - x2 * p2 * p2 * p2 / 840.0));
  }
  return cos_pi(x) / x - sin_pi(x) / (kPi * x * x);
}

BandlimitedSignal::BandlimitedSignal(int n_min, std::vector<Complex> coefficients)
    : n_min_(n_min), coeffs_(std::move(coefficients)) {
  for (const auto& c : coeffs_)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw ValidationError("BandlimitedSignal: non-finite coefficient");
}

BandlimitedSignal BandlimitedSignal::delta(int at) { return BandlimitedSignal(at, {Complex(1.0)}); }

Complex BandlimitedSignal::coefficient(int n) const {
  if (n < n_min_ || n > n_max()) return {};
  return coeffs_[static_cast<std::size_t>(n - n_min_)];
}

Complex BandlimitedSignal::operator()(double t) const {
  if (is_integer(t)) {
    const double k = t;
    if (k < n_min_ || k > n_max()) return {};
    return coefficient(static_cast<int>(k));
  }
  // sin(pi (t - n)) = (-1)^n sin(pi t)
  const double s = sin_pi(t) / kPi;
  Complex acc{};
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const std::int64_t n = n_min_ + static_cast<std::int64_t>(i);
    acc += coeffs_[i] * (parity(n) * s / (t - static_cast<double>(n)));
  }
  return acc;
}

Complex evaluate(const BandlimitedSignal& f, double t) { return f(t); }

BandlimitedSignal sharp(const BandlimitedSignal& f) {
  std::vector<Complex> c(f.coefficients().begin(), f.coefficients().end());
  for (auto& z : c) z = std::conj(z);
  return BandlimitedSignal(f.n_min(), std::move(c));
}

Complex derivative(const BandlimitedSignal& f, double t) {
  Complex acc{};
  const auto c = f.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i)
    acc += c[i] * sinc_derivative(t - static_cast<double>(f.n_min() + static_cast<int>(i)));
  return acc;
}

void ShiftScheme::validate() const {
  if (shifts.empty()) throw ValidationError("ShiftScheme: no shifts");
  if (step <= Rational(0)) throw ValidationError("ShiftScheme: step must be positive");
  for (std::size_t i = 0; i < shifts.size(); ++i)
    for (std::size_t j = i + 1; j < shifts.size(); ++j)
      if (shifts[i] == shifts[j]) throw ValidationError("ShiftScheme: shifts must be distinct");
}

ShiftScheme half_step_scheme() {
  return ShiftScheme{{Rational(0), Rational(1, 2), Rational(1)}, Rational(1, 2), Rational(0)};
}

Complex structured_convolution(const ComplexVector& v, const ShiftScheme& scheme,
                               const BandlimitedSignal& f, double t) {
  if (static_cast<std::size_t>(v.size()) != scheme.shifts.size())
    throw DimensionError("structured_convolution: vector length " + std::to_string(v.size()) +
                         " != number of shifts " + std::to_string(scheme.shifts.size()));
  Complex acc{};
  for (Index k = 0; k < v.size(); ++k)
    if (v(k) != Complex{}) acc += std::conj(v(k)) * f(t + to_double(scheme.shifts[static_cast<std::size_t>(k)]));
  return acc;
}

double HalfGridSamples::evaluate(double t) const {
  const double u = 2.0 * t;
  if (is_integer(u)) {
    if (u < n_min || u > n_max()) return 0.0;
    return values[static_cast<std::size_t>(static_cast<std::int64_t>(u) - n_min)];
  }
  const double s = sin_pi(u) / kPi;
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::int64_t n = n_min + static_cast<std::int64_t>(i);
    acc += values[i] * (parity(n) * s / (u - static_cast<double>(n)));
  }
  return acc;
}

HalfGridSamples magnitude_squared_coeffs(const std::function<double(double)>& squared_magnitude,
                                         int n_min, int n_max) {
  if (n_max < n_min) throw ValidationError("magnitude_squared_coeffs: empty grid");
  HalfGridSamples out{n_min, {}};
  out.values.reserve(static_cast<std::size_t>(n_max - n_min + 1));
  for (int n = n_min; n <= n_max; ++n) out.values.push_back(squared_magnitude(0.5 * n));
  return out;
}

HalfGridSamples magnitude_squared_coeffs(const BandlimitedSignal& h, int n_min, int n_max) {
  return magnitude_squared_coeffs([&h](double t) { return std::norm(h(t)); }, n_min, n_max);
}

std::vector<double> resample_magnitudes(const HalfGridSamples& squared, std::span<const double> points,
                                        double clamp_tolerance) {
  std::vector<double> out;
  out.reserve(points.size());
  for (double t : points) {
    double v = squared.evaluate(t);
    if (v < 0.0) {
      if (v < -clamp_tolerance)
        throw InconsistentDataError("resample_magnitudes: interpolated squared magnitude " +
                                    std::to_string(v) + " at t = " + std::to_string(t) +
                                    " is below -" + std::to_string(clamp_tolerance));
      v = 0.0;
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> resample_magnitudes(const HalfGridSamples& squared, double beta, int n_min,
                                        int n_max, double clamp_tolerance) {
  std::vector<double> points;
  for (int n = n_min; n <= n_max; ++n) points.push_back(0.5 * n - beta);
  return resample_magnitudes(squared, points, clamp_tolerance);
}

std::vector<std::pair<double, double>> conjugate_sampling_map(const BandlimitedSignal& f,
                                                              std::span<const double> grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  for (double t : grid) out.emplace_back(std::abs(f(t)), std::abs(derivative(f, t)));
  return out;
}

double theta_prime_squared(const BandlimitedSignal& f, double t) {
  const BandlimitedSignal fs = sharp(f);
  const Complex v = f(t), vs = fs(t);
  const Complex d = derivative(f, t), ds = derivative(fs, t);
  const Complex ffs = v * vs;
  if (std::abs(ffs) <= 1e-12)
    throw DataError("theta_prime_squared: |f(t)|^2 <= 1e-12 at t = " + std::to_string(t));
  const Complex dffs = d * vs + v * ds;
  return (d * ds / ffs - dffs * dffs / (4.0 * ffs * ffs)).real();
}

Rational shift_group_density(const ShiftScheme& scheme) {
  if (scheme.shifts.empty()) throw ValidationError("shift_group_density: no shifts");
  std::int64_t common = 1;
  for (const auto& b : scheme.shifts) common = std::lcm(common, b.denominator());
  std::int64_t g = 0;
  for (const auto& b : scheme.shifts) g = std::gcd(g, std::abs(b.numerator() * (common / b.denominator())));
  if (g == 0) throw ValidationError("shift_group_density: all shifts are zero");
  // group = (g / common) Z, density common / g
  return Rational(common, g);
}

}  // namespace cpr

#include "cpr/gs_solver.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cpr/finite_cpr.hpp"

namespace cpr {

void GsConfig::validate() const {
  if (max_iterations < 1) throw ValidationError("GsConfig: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw ValidationError("GsConfig: tolerance must be > 0");
  if (restarts < 1) throw ValidationError("GsConfig: restarts must be >= 1");
}

PinvOperator::PinvOperator(const CprMatrix& V) : adjoint_(V.columns().adjoint()) {
  Eigen::JacobiSVD<ComplexMatrix> svd(adjoint_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  singular_values_ = svd.singularValues();
  const double cutoff = 1e-12 * (singular_values_.size() ? singular_values_(0) : 0.0);
  rank_ = (singular_values_.array() > cutoff).count();
  if (rank_ < V.dim())
    throw RankDeficientError("build_pinv: V* has rank " + std::to_string(rank_) + " < K = " +
                             std::to_string(V.dim()) + "; V cannot do conjugate phase retrieval");
  const RealVector inv = singular_values_.cwiseInverse();
  pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
  projector_ = adjoint_ * pinv_;
}

PinvOperator build_pinv(const CprMatrix& V) { return PinvOperator(V); }

ComplexVector project_magnitudes(const ComplexVector& w, const RealVector& mags) {
  if (w.size() != mags.size()) throw DimensionError("project_magnitudes: length mismatch");
  ComplexVector out(w.size());
  for (Index j = 0; j < w.size(); ++j) {
    const double r = std::abs(w(j));
    out(j) = r > 0.0 ? w(j) * (mags(j) / r) : Complex(mags(j), 0.0);
  }
  return out;
}

ComplexVector gs_step(const PinvOperator& op, const ComplexVector& x, const RealVector& mags) {
  if (x.size() != op.count()) throw DimensionError("gs_step: iterate has wrong length");
  return project_magnitudes(op.projector() * x, mags);
}

namespace {

// Hot loop of the solver on raw buffers; M is tiny (3..6) so Eigen's dynamic
// dispatch costs more than the arithmetic.
class StepKernel {
 public:
  StepKernel(const ComplexMatrix& projector, const RealVector& mags)
      : m_(static_cast<std::size_t>(projector.rows())), p_(m_ * m_), mags_(m_) {
    for (std::size_t i = 0; i < m_; ++i) {
      mags_[i] = mags(static_cast<Index>(i));
      for (std::size_t j = 0; j < m_; ++j)
        p_[i * m_ + j] = projector(static_cast<Index>(i), static_cast<Index>(j));
    }
  }

  // w = P x; returns || mags - |w| ||_2.
  double apply(const Complex* x, Complex* w) const {
    double res = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const Complex* row = &p_[i * m_];
      double re = 0.0, im = 0.0;
      for (std::size_t j = 0; j < m_; ++j) {
        re += row[j].real() * x[j].real() - row[j].imag() * x[j].imag();
        im += row[j].real() * x[j].imag() + row[j].imag() * x[j].real();
      }
      w[i] = Complex(re, im);
      const double d = mags_[i] - std::sqrt(re * re + im * im);
      res += d * d;
    }
    return std::sqrt(res);
  }

  void project(const Complex* w, Complex* x) const {
    for (std::size_t i = 0; i < m_; ++i) {
      const double re = w[i].real(), im = w[i].imag();
      const double r = std::sqrt(re * re + im * im);
      x[i] = r > 0.0 ? Complex(re * (mags_[i] / r), im * (mags_[i] / r)) : Complex(mags_[i], 0.0);
    }
  }

 private:
  std::size_t m_;
  std::vector<Complex> p_;
  std::vector<double> mags_;
};

}  // namespace

GsResult gs_solve(const PinvOperator& op, const RealVector& mags, const ComplexVector& initial_phases,
                  const GsConfig& config, const ComplexVector* ground_truth) {
  config.validate();
  const Index M = op.count();
  if (mags.size() != M || initial_phases.size() != M)
    throw DimensionError("gs_solve: magnitudes/phases must have length M = " + std::to_string(M));
  if ((mags.array() < 0.0).any() || !mags.allFinite())
    throw ValidationError("gs_solve: magnitudes must be finite and nonnegative");
  for (Index j = 0; j < M; ++j)
    if (std::abs(std::abs(initial_phases(j)) - 1.0) > 1e-9)
      throw ValidationError("gs_solve: initial phases must be unimodular");
  if (ground_truth && ground_truth->size() != op.dim())
    throw DimensionError("gs_solve: ground truth must have length K");

  const StepKernel kernel(op.projector(), mags);
  ComplexVector x = initial_phases.cwiseProduct(mags.cast<Complex>());
  ComplexVector w(M);

  GsResult out;
  GsTrace& trace = out.trace;
  if (config.record_trace) {
    trace.residuals.reserve(static_cast<std::size_t>(config.max_iterations));
    if (ground_truth) trace.epsilons.reserve(static_cast<std::size_t>(config.max_iterations));
  }

  // V^+ x = V^+ (V* V^+ x), so estimates are read off the projected iterate w.
  auto epsilon_of = [&](const ComplexVector& projected) {
    return cpr_distance(*ground_truth, op.pinv() * projected);
  };

  double residual = kernel.apply(x.data(), w.data());
  double epsilon = ground_truth ? epsilon_of(w) : 0.0;
  auto below = [&] { return (ground_truth ? epsilon : residual) < config.tolerance; };
  if (below()) trace.iterations_to_threshold = 0;

  for (int n = 1; n <= config.max_iterations; ++n) {
    kernel.project(w.data(), x.data());
    residual = kernel.apply(x.data(), w.data());
    if (ground_truth) epsilon = epsilon_of(w);
    if (config.record_trace) {
      trace.residuals.push_back(residual);
      if (ground_truth) trace.epsilons.push_back(epsilon);
    }
    if (!trace.iterations_to_threshold && below()) trace.iterations_to_threshold = n;
  }

  trace.converged = trace.iterations_to_threshold.has_value();
  trace.final_residual = residual;
  if (ground_truth) trace.final_epsilon = epsilon;
  out.estimate = op.pinv() * w;
  return out;
}

ComplexVector random_phases(CounterRng& rng, Index count) {
  ComplexVector a(count);
  for (Index j = 0; j < count; ++j) {
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    a(j) = Complex(std::cos(theta), std::sin(theta));
  }
  return a;
}

MultistartResult gs_multistart(const PinvOperator& op, const RealVector& mags, const GsConfig& config,
                               std::uint64_t stream_id) {
  config.validate();
  MultistartResult best;
  best.restarts = config.restarts;
  for (int r = 0; r < config.restarts; ++r) {
    CounterRng rng(config.rng_seed, Stream::kInitialPhases, stream_id, static_cast<std::uint64_t>(r));
    GsResult res = gs_solve(op, mags, random_phases(rng, op.count()), config);
    if (r == 0 || res.trace.final_residual < best.best_residual) {
      best.best_residual = res.trace.final_residual;
      best.best_restart = r;
      best.estimate = std::move(res.estimate);
    }
    if (config.record_trace) best.traces.push_back(std::move(res.trace));
  }
  return best;
}

}  // namespace cpr

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpr/rng.hpp"
#include "cpr/types.hpp"

namespace cpr {

struct GsConfig {
  int max_iterations = 900;
  double tolerance = 1e-8;
  int restarts = 1;
  std::uint64_t rng_seed = 0;
  /// Keep the per-iteration residual/epsilon series. Off in the pipeline hot loop.
  bool record_trace = true;

  void validate() const;
};

/// Per-iteration diagnostics. Entry i of residuals/epsilons belongs to the
/// iterate after i + 1 steps; iteration 0 (the starting point) is only
/// reflected in iterations_to_threshold.
struct GsTrace {
  std::vector<double> residuals;  // || mags - |V* V^+ x^n| ||_2
  std::vector<double> epsilons;   // cpr_distance(truth, V^+ x^n), benchmark mode only
  bool converged = false;
  std::optional<int> iterations_to_threshold;
  double final_residual = 0.0;
  std::optional<double> final_epsilon;
};

/// Precomputed V* and its Moore-Penrose inverse, shared read-only by all solves.
class PinvOperator {
 public:
  explicit PinvOperator(const CprMatrix& V);

  Index dim() const { return pinv_.rows(); }
  Index count() const { return adjoint_.rows(); }

  const ComplexMatrix& adjoint() const { return adjoint_; }    // V*, M x K
  const ComplexMatrix& pinv() const { return pinv_; }          // (V*)^+, K x M
  const ComplexMatrix& projector() const { return projector_; }  // V* (V*)^+, M x M
  const RealVector& singular_values() const { return singular_values_; }
  Index rank() const { return rank_; }

 private:
  ComplexMatrix adjoint_;
  ComplexMatrix pinv_;
  ComplexMatrix projector_;
  RealVector singular_values_;
  Index rank_ = 0;
};

PinvOperator build_pinv(const CprMatrix& V);

/// Entry j is mags_j * w_j / |w_j|, or mags_j when w_j == 0.
ComplexVector project_magnitudes(const ComplexVector& w, const RealVector& mags);

/// One alternating-projection step x -> S(V* V^+ x).
ComplexVector gs_step(const PinvOperator& op, const ComplexVector& x, const RealVector& mags);

struct GsResult {
  ComplexVector estimate;  // V^+ x^final, length K
  GsTrace trace;
};

/// Runs max_iterations steps from x^0_j = initial_phases_j * mags_j.
/// With a ground truth the convergence test is on epsilon, otherwise on the residual.
GsResult gs_solve(const PinvOperator& op, const RealVector& mags, const ComplexVector& initial_phases,
                  const GsConfig& config, const ComplexVector* ground_truth = nullptr);

/// exp(2 pi i u_j) with u_j uniform on [0, 1).
ComplexVector random_phases(CounterRng& rng, Index count);

struct MultistartResult {
  ComplexVector estimate;
  double best_residual = 0.0;
  int best_restart = 0;
  int restarts = 0;
  std::vector<GsTrace> traces;
};

/// config.restarts independent solves; restart r draws its phases from stream
/// (rng_seed, kInitialPhases, stream_id, r). Returns the restart with the
/// smallest final residual.
MultistartResult gs_multistart(const PinvOperator& op, const RealVector& mags, const GsConfig& config,
                               std::uint64_t stream_id = 0);

}  // namespace cpr

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpr/gs_solver.hpp"
#include "cpr/pw_signal.hpp"
#include "cpr/types.hpp"

namespace cpr {

/// Inclusive integer range.
struct IndexRange {
  int first = 0;
  int last = -1;

  int size() const { return last >= first ? last - first + 1 : 0; }
  bool contains(int n) const { return n >= first && n <= last; }
  bool contains(const IndexRange& r) const { return r.size() == 0 || (contains(r.first) && contains(r.last)); }
};

struct PipelineConfig {
  CprMatrix matrix = standard_cpr_matrix();
  ShiftScheme scheme = half_step_scheme();
  /// Fixed resampling offset; drawn uniformly on [0, 1) when empty.
  std::optional<double> beta;
  GsConfig gs = {.max_iterations = 900, .tolerance = 1e-8, .restarts = 100, .rng_seed = 0, .record_trace = false};
  /// Column indices n of the recovered vectors F(x_n - beta).
  IndexRange columns{-40, 40};
  /// Measurement grid indices kept for the resampling series.
  IndexRange series_window{-80, 80};
  /// Integer coefficient window of the signal (known support).
  IndexRange support{-10, 10};
  /// Relative threshold on |det M| of the overlap below which both conjugations are consistent.
  double stitch_threshold = 1e-6;
  /// Negative resampled |.|^2 values above -clamp_tolerance * (row peak) are clamped to zero.
  double clamp_tolerance = 1e-3;
  /// Rows that are actually sampled; empty means every row. The rest must be
  /// lattice translates of a sampled row.
  std::vector<Index> measured_rows;

  /// Checks certify_cpr on the matrix and, unless skipped, that the shift group has density > 1.
  void validate(bool require_density = true) const;
};

/// Shifts (1, 0, -1) on the integer lattice, sampling only rows 0, 3, 4 of the
/// standard matrix: three functions at the Nyquist rate.
PipelineConfig three_times_nyquist_config();

/// Row m satisfies (v_m * f)(t) = (v_base * f)(t + offset_steps * step).
struct RowRelation {
  Index base = 0;
  std::int64_t offset_steps = 0;
};

/// For every row, the first earlier row it is a lattice translate of (or itself).
std::vector<RowRelation> lattice_redundancy(const CprMatrix& V, const ShiftScheme& scheme);

/// Nonnegative magnitudes, rows = measurement vectors, columns = grid points
/// t_n = offset + n * step for n in [n_min, n_min + cols).
struct MagnitudeGrid {
  int n_min = 0;
  Rational step{1, 2};
  double offset = 0.0;
  RealMatrix values;

  int n_max() const { return n_min + static_cast<int>(values.cols()) - 1; }
  double point(int n) const { return offset + to_double(step * n); }
  RealVector column(int n) const { return values.col(n - n_min); }
  double at(Index row, int n) const { return values(row, n - n_min); }
};

/// R[m][n] = |(v_m * f)(t_n)| on the series window, t_n = n * step.
/// Verifies the lattice redundancy of the rows before returning.
MagnitudeGrid generate_measurements(const BandlimitedSignal& f, const PipelineConfig& config);

/// Same on an arbitrary grid t_n = offset + n * step, n in `indices`; no redundancy check.
MagnitudeGrid generate_measurements(const BandlimitedSignal& f, const CprMatrix& V, const ShiftScheme& scheme,
                                    double offset, IndexRange indices);

/// Largest deviation between rows related by lattice_redundancy (where both are on the grid).
double redundancy_defect(const MagnitudeGrid& R, const std::vector<RowRelation>& relations);

/// Resamples the sampled rows of R (half-grid, offset 0) at t = x_n - beta and
/// fills every row of the columns window via the lattice relations.
MagnitudeGrid shift_magnitudes(const MagnitudeGrid& R, double beta, const PipelineConfig& config);

struct ColumnEstimate {
  int index = 0;
  ComplexVector estimate;  // up to phase and conjugation
  double residual = 0.0;
  int best_restart = 0;
  int restarts = 0;
  bool conjugated = false;   // set by stitch
  Complex phase{1.0, 0.0};   // set by stitch
};

/// gs_multistart on each column of R_beta; column n uses stream (run_id, n).
std::vector<ColumnEstimate> columnwise_recover(const MagnitudeGrid& R_beta, const PipelineConfig& config,
                                               std::uint64_t run_id = 0);

struct StitchResult {
  /// Sample lattice indices j (point j * step - beta) and their aligned values.
  int j_min = 0;
  std::vector<Complex> samples;
  std::vector<ComplexVector> aligned;
  /// Columns whose overlap determinant was below threshold (either conjugation consistent).
  std::vector<int> ambiguous_columns;
  /// Columns whose overlap entries were all ~0; alignment was carried forward.
  std::vector<int> degenerate_columns;
};

/// Aligns each column to its left neighbour on the shared entries, choosing
/// conjugation and a unimodular phase by least squares. Updates the
/// conjugated/phase fields of `estimates`.
StitchResult stitch(std::vector<ColumnEstimate>& estimates, const PipelineConfig& config);

/// Least-squares integer-grid coefficients on `support` fitting the samples.
/// Throws IllConditionedError if cond(A^T A) exceeds max_condition.
BandlimitedSignal assemble_signal(std::span<const Complex> samples, std::span<const double> points,
                                  IndexRange support, double max_condition = 1e8);

/// Conjugation-minimized ||ff* - rr*||_F / ||ff*||_F on the grid -20:0.5:20.
double relative_error(const BandlimitedSignal& f, const BandlimitedSignal& r);
std::vector<double> error_grid();

struct ReconstructionResult {
  double beta = 0.0;
  std::vector<double> points;
  std::vector<Complex> samples;
  BandlimitedSignal estimate;
  std::optional<double> relative_error;
  std::vector<ColumnEstimate> columns;
  std::vector<int> ambiguous_columns;
  std::vector<int> degenerate_columns;

  bool overlap_flagged() const { return !ambiguous_columns.empty() || !degenerate_columns.empty(); }
};

/// Benchmark mode: measures f, reconstructs, attaches relative_error.
ReconstructionResult run_algorithm1(const BandlimitedSignal& f, const PipelineConfig& config,
                                    std::uint64_t run_id = 0);
/// Data mode: reconstructs from a measurement grid on the series window.
ReconstructionResult run_algorithm1(const MagnitudeGrid& R, const PipelineConfig& config,
                                    std::uint64_t run_id = 0);

/// Samples rows 0, 3, 4 at n - beta and reconstructs on the integer grid.
/// `config` should come from three_times_nyquist_config().
ReconstructionResult run_algorithm2(const BandlimitedSignal& f, double beta, const PipelineConfig& config,
                                    std::uint64_t run_id = 0);

/// Resolves config.beta, drawing from stream (gs.rng_seed, kBeta, run_id) when unset.
double resolve_beta(const PipelineConfig& config, std::uint64_t run_id);

}  // namespace cpr

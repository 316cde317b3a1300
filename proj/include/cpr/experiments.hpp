#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cpr/gs_solver.hpp"
#include "cpr/recon_pipeline.hpp"

namespace cpr {

enum class ExperimentKind { kGsBench, kE2eBench, kReconstruct, kVerifyMatrix, kEmitTraces };
enum class OutputFormat { kCsv, kStructuredText };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kGsBench;
  int trials = 1000;
  int instances = 100;
  int betas_per_instance = 20;
  GsConfig gs;  // single start, 900 iterations, 1e-8
  PipelineConfig pipeline;
  std::optional<std::uint64_t> seed;
  std::string output_path;
  OutputFormat format = OutputFormat::kCsv;
  int threads = 1;
  /// Classify gs-bench success by the measurement residual instead of epsilon.
  bool residual_success = false;

  void validate() const;
};

/// Worker count from --threads, else CPR_THREADS, else 1.
int resolve_threads(std::optional<int> requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
/// written by index so the outcome does not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

struct TrialRecord {
  int trial_id = 0;
  bool success = false;
  std::optional<int> iterations_to_threshold;
  double final_epsilon = 0.0;
  double final_residual = 0.0;
  GsTrace trace;
};

struct BenchmarkSummary {
  int trials = 0;
  int success_count = 0;
  double success_rate = 0.0;
  /// Over successful trials only; NaN when there are none.
  double mean_iterations = 0.0;
  double median_iterations = 0.0;
  std::vector<TrialRecord> records;
};

/// Random vector with Re, Im uniform on [0, 1), stream (seed, kGroundTruth, trial).
ComplexVector benchmark_vector(std::uint64_t seed, int trial, Index dim);

/// Single-start GS on `trials` random vectors against config.pipeline.matrix.
BenchmarkSummary run_gs_benchmark(const ExperimentConfig& config);

/// Aggregates records into rate / mean / median (first-crossing iterations, successes only).
BenchmarkSummary summarize(std::vector<TrialRecord> records);

/// Recomputes the aggregates from the records and compares.
bool verify_summary(const BenchmarkSummary& summary);

/// Coefficients Re, Im uniform on [0, 1) on `support`, with f(0) = 0 when 0 is in the support.
BandlimitedSignal random_test_signal(std::uint64_t seed, int instance, IndexRange support);

struct InstanceRecord {
  int instance_id = 0;
  std::vector<double> betas;
  std::vector<double> errors;
  int best_index = 0;
  double best_error = 0.0;
};

struct E2eSummary {
  std::vector<InstanceRecord> instances;
  double max_best_error = 0.0;
  double median_best_error = 0.0;
};

/// Per instance: betas_per_instance runs of run_algorithm1 with nested beta draws,
/// keeping the smallest relative error.
E2eSummary run_e2e_benchmark(const ExperimentConfig& config);

double median(std::vector<double> values);

/// trial_id,success,iterations_to_threshold,final_epsilon,final_residual
void write_gs_records_csv(std::ostream& os, const BenchmarkSummary& summary);
/// trial_id,restart_id,iteration,residual,epsilon (one row per recorded iteration)
void write_traces_csv(std::ostream& os, const BenchmarkSummary& summary);
/// instance_id,beta_index,beta,relative_error,is_best
void write_e2e_csv(std::ostream& os, const E2eSummary& summary);

/// Fixed-format decimal with 12 significant digits.
std::string format_number(double x);

}  // namespace cpr

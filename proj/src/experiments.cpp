#include "cpr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "cpr/finite_cpr.hpp"
#include "cpr/rng.hpp"

namespace cpr {

void ExperimentConfig::validate() const {
  if (trials < 1) throw ValidationError("trials must be positive");
  if (instances < 1) throw ValidationError("instances must be positive");
  if (betas_per_instance < 1) throw ValidationError("betas must be positive");
  if (threads < 1) throw ValidationError("threads must be positive");
  gs.validate();
  const bool bench = kind == ExperimentKind::kGsBench || kind == ExperimentKind::kE2eBench ||
                     kind == ExperimentKind::kEmitTraces;
  if (bench && !seed) throw ValidationError("a seed is required for benchmark runs");
}

int resolve_threads(std::optional<int> requested) {
  if (requested) return *requested;
  if (const char* env = std::getenv("CPR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
    throw ValidationError("CPR_THREADS must be a positive integer");
  }
  return 1;
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ComplexVector benchmark_vector(std::uint64_t seed, int trial, Index dim) {
  CounterRng rng(seed, Stream::kGroundTruth, static_cast<std::uint64_t>(trial));
  ComplexVector y(dim);
  for (Index k = 0; k < dim; ++k) {
    const double re = rng.uniform();
    const double im = rng.uniform();
    y(k) = Complex(re, im);
  }
  return y;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

BenchmarkSummary summarize(std::vector<TrialRecord> records) {
  BenchmarkSummary s;
  s.trials = static_cast<int>(records.size());
  std::vector<double> iters;
  for (const auto& r : records)
    if (r.success) {
      ++s.success_count;
      if (r.iterations_to_threshold) iters.push_back(*r.iterations_to_threshold);
    }
  s.success_rate = s.trials ? static_cast<double>(s.success_count) / s.trials : 0.0;
  if (iters.empty()) {
    s.mean_iterations = s.median_iterations = std::numeric_limits<double>::quiet_NaN();
  } else {
    double sum = 0.0;
    for (double v : iters) sum += v;
    s.mean_iterations = sum / static_cast<double>(iters.size());
    s.median_iterations = median(iters);
  }
  s.records = std::move(records);
  return s;
}

bool verify_summary(const BenchmarkSummary& summary) {
  const BenchmarkSummary again = summarize(summary.records);
  auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  return again.trials == summary.trials && again.success_count == summary.success_count &&
         same(again.success_rate, summary.success_rate) && same(again.mean_iterations, summary.mean_iterations) &&
         same(again.median_iterations, summary.median_iterations);
}

BenchmarkSummary run_gs_benchmark(const ExperimentConfig& config) {
  config.validate();
  const CprMatrix& V = config.pipeline.matrix;
  if (!certify_cpr(V)) throw ValidationError("gs-bench: matrix does not do conjugate phase retrieval");
  const PinvOperator op(V);
  const std::uint64_t seed = *config.seed;

  std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
  parallel_for(config.trials, config.threads, [&](int trial) {
    const ComplexVector y = benchmark_vector(seed, trial, V.dim());
    const RealVector mags = magnitude_measurements(V, y);
    CounterRng rng(seed, Stream::kInitialPhases, static_cast<std::uint64_t>(trial), 0);
    const ComplexVector phases = random_phases(rng, V.count());
    GsResult res = gs_solve(op, mags, phases, config.gs, &y);

    TrialRecord& r = records[static_cast<std::size_t>(trial)];
    r.trial_id = trial;
    r.final_epsilon = *res.trace.final_epsilon;
    r.final_residual = res.trace.final_residual;
    if (config.residual_success) {
      r.success = r.final_residual < config.gs.tolerance;
      // first crossing of the residual
      const auto& rs = res.trace.residuals;
      for (std::size_t i = 0; i < rs.size() && r.success; ++i)
        if (rs[i] < config.gs.tolerance) {
          r.iterations_to_threshold = static_cast<int>(i + 1);
          break;
        }
    } else {
      r.success = r.final_epsilon < config.gs.tolerance;
      if (r.success) r.iterations_to_threshold = res.trace.iterations_to_threshold;
    }
    r.trace = std::move(res.trace);
  });
  return summarize(std::move(records));
}

BandlimitedSignal random_test_signal(std::uint64_t seed, int instance, IndexRange support) {
  CounterRng rng(seed, Stream::kGroundTruth, static_cast<std::uint64_t>(instance), 1);
  std::vector<Complex> c;
  for (int n = support.first; n <= support.last; ++n) {
    const double re = rng.uniform();
    const double im = rng.uniform();
    c.emplace_back(n == 0 ? Complex{} : Complex(re, im));
  }
  return BandlimitedSignal(support.first, std::move(c));
}

E2eSummary run_e2e_benchmark(const ExperimentConfig& config) {
  config.validate();
  const std::uint64_t seed = *config.seed;
  const int runs = config.instances * config.betas_per_instance;
  std::vector<double> betas(static_cast<std::size_t>(runs)), errors(static_cast<std::size_t>(runs));

  parallel_for(runs, config.threads, [&](int i) {
    const int inst = i / config.betas_per_instance;
    const int b = i % config.betas_per_instance;
    PipelineConfig pc = config.pipeline;
    pc.gs.rng_seed = seed;
    CounterRng beta_rng(seed, Stream::kBeta, static_cast<std::uint64_t>(inst), static_cast<std::uint64_t>(b));
    pc.beta = beta_rng.uniform();
    const BandlimitedSignal f = random_test_signal(seed, inst, pc.support);
    // run ids are distinct per (instance, beta index) and independent of betas_per_instance
    const auto run_id = (static_cast<std::uint64_t>(inst) << 16) | static_cast<std::uint64_t>(b);
    const ReconstructionResult res = run_algorithm1(f, pc, run_id);
    betas[static_cast<std::size_t>(i)] = *pc.beta;
    errors[static_cast<std::size_t>(i)] = *res.relative_error;
  });

  E2eSummary s;
  std::vector<double> bests;
  for (int inst = 0; inst < config.instances; ++inst) {
    InstanceRecord rec;
    rec.instance_id = inst;
    for (int b = 0; b < config.betas_per_instance; ++b) {
      const auto i = static_cast<std::size_t>(inst * config.betas_per_instance + b);
      rec.betas.push_back(betas[i]);
      rec.errors.push_back(errors[i]);
      if (b == 0 || errors[i] < rec.best_error) {
        rec.best_error = errors[i];
        rec.best_index = b;
      }
    }
    bests.push_back(rec.best_error);
    s.instances.push_back(std::move(rec));
  }
  s.max_best_error = *std::max_element(bests.begin(), bests.end());
  s.median_best_error = median(bests);
  return s;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_gs_records_csv(std::ostream& os, const BenchmarkSummary& summary) {
  os << "trial_id,success,iterations_to_threshold,final_epsilon,final_residual\n";
  for (const auto& r : summary.records) {
    os << r.trial_id << ',' << (r.success ? 1 : 0) << ','
       << (r.iterations_to_threshold ? std::to_string(*r.iterations_to_threshold) : std::string()) << ','
       << format_number(r.final_epsilon) << ',' << format_number(r.final_residual) << '\n';
  }
}

void write_traces_csv(std::ostream& os, const BenchmarkSummary& summary) {
  os << "trial_id,restart_id,iteration,residual,epsilon\n";
  for (const auto& r : summary.records) {
    const auto& t = r.trace;
    for (std::size_t i = 0; i < t.residuals.size(); ++i) {
      os << r.trial_id << ",0," << (i + 1) << ',' << format_number(t.residuals[i]) << ',';
      if (i < t.epsilons.size()) os << format_number(t.epsilons[i]);
      os << '\n';
    }
  }
}

void write_e2e_csv(std::ostream& os, const E2eSummary& summary) {
  os << "instance_id,beta_index,beta,relative_error,is_best\n";
  for (const auto& inst : summary.instances)
    for (std::size_t b = 0; b < inst.errors.size(); ++b)
      os << inst.instance_id << ',' << b << ',' << format_number(inst.betas[b]) << ','
         << format_number(inst.errors[b]) << ',' << (static_cast<int>(b) == inst.best_index ? 1 : 0) << '\n';
}

}  // namespace cpr

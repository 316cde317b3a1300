#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpr/experiments.hpp"
#include "cpr/finite_cpr.hpp"
#include "cpr/io.hpp"
#include "cpr/recon_pipeline.hpp"

namespace cpr {

namespace {

struct Options {
  std::string matrix_path;
  std::string signal_path;
  int trials = 1000;
  int instances = 100;
  int betas = 20;
  int iters = 900;
  double tol = 1e-8;
  std::optional<int> restarts;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::string out;
  std::string format = "csv";
  std::optional<int> threads;
  int algorithm = 1;
  bool residual_success = false;
};

// Writes to --out when given; the summary always goes to stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) return;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open output file '" + path + "'");
  write(os);
  if (!os) throw DataError("failed writing '" + path + "'");
}

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "structured-text") return OutputFormat::kStructuredText;
  throw ValidationError("--format must be csv or structured-text");
}

ExperimentConfig make_config(const Options& o, ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.trials = o.trials;
  c.instances = o.instances;
  c.betas_per_instance = o.betas;
  c.gs.max_iterations = o.iters;
  c.gs.tolerance = o.tol;
  c.gs.restarts = 1;
  c.seed = o.seed;
  c.output_path = o.out;
  c.format = parse_format(o.format);
  c.threads = resolve_threads(o.threads);
  c.residual_success = o.residual_success;
  if (!o.matrix_path.empty()) c.pipeline.matrix = read_matrix_file(o.matrix_path);
  c.pipeline.gs.max_iterations = o.iters;
  c.pipeline.gs.tolerance = o.tol;
  if (o.restarts) c.pipeline.gs.restarts = *o.restarts;
  if (o.seed) c.pipeline.gs.rng_seed = *o.seed;
  c.pipeline.beta = o.beta;
  c.validate();
  return c;
}

void print_summary(std::ostream& out, const BenchmarkSummary& s) {
  out << "trials: " << s.trials << '\n'
      << "successes: " << s.success_count << " (" << format_number(100.0 * s.success_rate) << "%)\n"
      << "mean iterations to threshold: " << format_number(s.mean_iterations) << '\n'
      << "median iterations to threshold: " << format_number(s.median_iterations) << '\n';
}

int run_verify(const Options& o, std::ostream& out) {
  if (o.matrix_path.empty()) throw ValidationError("verify-matrix needs --matrix");
  const CprMatrix V = read_matrix_file(o.matrix_path);
  const CprCertificate cert = certify_cpr_detailed(V);
  out << "K = " << V.dim() << ", M = " << V.count() << '\n';
  if (cert.does_cpr) {
    out << "witness columns:";
    for (Index j : cert.witness) out << ' ' << j + 1;
    out << "\ndeterminant: " << format_number(cert.determinant) << '\n';
  }
  out << "CPR: " << (cert.does_cpr ? "yes" : "no") << '\n';
  return 0;
}

int run_gs_bench(const Options& o, std::ostream& out, bool traces) {
  const ExperimentConfig c = make_config(o, traces ? ExperimentKind::kEmitTraces : ExperimentKind::kGsBench);
  const BenchmarkSummary s = run_gs_benchmark(c);
  if (!verify_summary(s)) throw std::logic_error("benchmark summary does not match its records");
  print_summary(out, s);
  if (traces) {
    emit(c.output_path, [&](std::ostream& os) { write_traces_csv(os, s); });
  } else if (c.format == OutputFormat::kCsv) {
    emit(c.output_path, [&](std::ostream& os) { write_gs_records_csv(os, s); });
  } else {
    emit(c.output_path, [&](std::ostream& os) {
      nlohmann::json doc{{"trials", s.trials},
                         {"success_count", s.success_count},
                         {"success_rate", s.success_rate},
                         {"mean_iterations", std::isnan(s.mean_iterations) ? nlohmann::json() : nlohmann::json(s.mean_iterations)},
                         {"median_iterations", std::isnan(s.median_iterations) ? nlohmann::json() : nlohmann::json(s.median_iterations)},
                         {"seed", *c.seed}};
      for (const auto& r : s.records)
        doc["records"].push_back({{"trial_id", r.trial_id},
                                  {"success", r.success},
                                  {"iterations_to_threshold", r.iterations_to_threshold ? nlohmann::json(*r.iterations_to_threshold) : nlohmann::json()},
                                  {"final_epsilon", r.final_epsilon},
                                  {"final_residual", r.final_residual}});
      os << doc.dump(2) << '\n';
    });
  }
  return 0;
}

int run_e2e(const Options& o, std::ostream& out) {
  const ExperimentConfig c = make_config(o, ExperimentKind::kE2eBench);
  const E2eSummary s = run_e2e_benchmark(c);
  for (const auto& inst : s.instances)
    out << "instance " << inst.instance_id << ": best relative error " << format_number(inst.best_error)
        << " (beta = " << format_number(inst.betas[static_cast<std::size_t>(inst.best_index)]) << ")\n";
  out << "median best error: " << format_number(s.median_best_error) << '\n'
      << "max best error: " << format_number(s.max_best_error) << '\n';
  if (c.format == OutputFormat::kCsv) {
    emit(c.output_path, [&](std::ostream& os) { write_e2e_csv(os, s); });
  } else {
    emit(c.output_path, [&](std::ostream& os) {
      nlohmann::json doc{{"median_best_error", s.median_best_error}, {"max_best_error", s.max_best_error}};
      for (const auto& inst : s.instances)
        doc["instances"].push_back({{"instance_id", inst.instance_id},
                                    {"betas", inst.betas},
                                    {"errors", inst.errors},
                                    {"best_index", inst.best_index},
                                    {"best_error", inst.best_error}});
      os << doc.dump(2) << '\n';
    });
  }
  return 0;
}

int run_reconstruct(const Options& o, std::ostream& out) {
  if (o.signal_path.empty()) throw ValidationError("reconstruct needs --signal");
  ExperimentConfig c = make_config(o, ExperimentKind::kReconstruct);
  const BandlimitedSignal f = read_signal_file(o.signal_path);
  if (f.empty()) throw ValidationError("signal file has no coefficients");

  PipelineConfig pc = c.pipeline;
  if (o.algorithm == 2) {
    PipelineConfig three = three_times_nyquist_config();
    three.gs = pc.gs;
    three.matrix = pc.matrix;
    three.beta = pc.beta;
    pc = three;
  } else if (o.algorithm != 1) {
    throw ValidationError("--algorithm must be 1 or 2");
  }
  pc.support = {std::min(pc.support.first, f.n_min()), std::max(pc.support.last, f.n_max())};
  const auto [lo, hi] = std::pair{pc.support.first, pc.support.last};
  if (o.algorithm == 1) {
    pc.series_window = {std::min(pc.series_window.first, 2 * lo - 60), std::max(pc.series_window.last, 2 * hi + 60)};
  }

  const ReconstructionResult r =
      o.algorithm == 1 ? run_algorithm1(f, pc) : run_algorithm2(f, resolve_beta(pc, 0), pc);
  out << "beta: " << format_number(r.beta) << '\n'
      << "relative error: " << format_number(*r.relative_error) << '\n';
  if (r.overlap_flagged())
    out << "warning: " << r.ambiguous_columns.size() << " ambiguous and " << r.degenerate_columns.size()
        << " degenerate overlaps\n";
  if (c.format == OutputFormat::kCsv)
    emit(c.output_path, [&](std::ostream& os) { write_samples_csv(os, r); });
  else
    emit(c.output_path, [&](std::ostream& os) { write_reconstruction_json(os, r, pc); });
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conjugate phase retrieval: matrix certification, Gerchberg-Saxton benchmarks, reconstruction"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--matrix", o.matrix_path, "Measurement matrix file (default: standard 3x6 frame)");
    sub->add_option("--iters", o.iters, "Gerchberg-Saxton iterations")->check(CLI::PositiveNumber);
    sub->add_option("--tol", o.tol, "Convergence threshold")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--out", o.out, "Output file");
    sub->add_option("--format", o.format, "csv | structured-text");
    sub->add_option("--threads", o.threads, "Worker threads (default: CPR_THREADS or 1)")->check(CLI::PositiveNumber);
  };

  auto* verify = app.add_subcommand("verify-matrix", "Certify that a real K x M matrix does CPR (K = 2, 3)");
  verify->add_option("--matrix", o.matrix_path, "Matrix file")->required();

  auto* gs = app.add_subcommand("gs-bench", "Single-start Gerchberg-Saxton success statistics");
  add_common(gs);
  gs->add_option("--trials", o.trials, "Number of random vectors")->check(CLI::PositiveNumber);
  gs->add_flag("--residual-success", o.residual_success, "Classify success by measurement residual");

  auto* traces = app.add_subcommand("emit-traces", "Per-iteration residual/epsilon traces as CSV");
  add_common(traces);
  traces->add_option("--trials", o.trials, "Number of random vectors")->check(CLI::PositiveNumber);

  auto* e2e = app.add_subcommand("e2e-bench", "End-to-end reconstruction benchmark on random signals");
  add_common(e2e);
  e2e->add_option("--instances", o.instances, "Number of random signals")->check(CLI::PositiveNumber);
  e2e->add_option("--betas", o.betas, "Beta draws per signal")->check(CLI::PositiveNumber);
  e2e->add_option("--restarts", o.restarts, "GS restarts per column")->check(CLI::PositiveNumber);

  auto* recon = app.add_subcommand("reconstruct", "Reconstruct a signal file from its phaseless measurements");
  add_common(recon);
  recon->add_option("--signal", o.signal_path, "Signal file (lines 'n re im')")->required();
  recon->add_option("--beta", o.beta, "Fixed beta in [0, 1) (default: random)");
  recon->add_option("--restarts", o.restarts, "GS restarts per column")->check(CLI::PositiveNumber);
  recon->add_option("--algorithm", o.algorithm, "1 (structured convolutions) or 2 (3x Nyquist)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*verify) return run_verify(o, out);
    if (*gs) return run_gs_bench(o, out, false);
    if (*traces) return run_gs_bench(o, out, true);
    if (*e2e) return run_e2e(o, out);
    if (*recon) return run_reconstruct(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace cpr

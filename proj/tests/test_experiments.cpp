#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "cpr/experiments.hpp"
#include "cpr/finite_cpr.hpp"

using namespace cpr;

namespace {

ExperimentConfig gs_config(int trials, std::uint64_t seed) {
  ExperimentConfig c;
  c.trials = trials;
  c.seed = seed;
  return c;
}

std::string csv(const BenchmarkSummary& s) {
  std::ostringstream os;
  write_gs_records_csv(os, s);
  return os.str();
}

}  // namespace

TEST_CASE("parallel_for writes by index") {
  for (int threads : {1, 3, 8}) {
    std::vector<int> out(100, -1);
    parallel_for(100, threads, [&](int i) { out[static_cast<std::size_t>(i)] = i * i; });
    for (int i = 0; i < 100; ++i) CHECK(out[static_cast<std::size_t>(i)] == i * i);
  }
  CHECK_THROWS_AS(parallel_for(10, 4, [](int i) { if (i == 7) throw DataError("boom"); }), DataError);
  parallel_for(0, 4, [](int) { FAIL("no work expected"); });
}

TEST_CASE("resolve_threads") {
  CHECK(resolve_threads(5) == 5);
  ::setenv("CPR_THREADS", "3", 1);
  CHECK(resolve_threads(std::nullopt) == 3);
  ::setenv("CPR_THREADS", "zero", 1);
  CHECK_THROWS_AS(resolve_threads(std::nullopt), ValidationError);
  ::unsetenv("CPR_THREADS");
  CHECK(resolve_threads(std::nullopt) == 1);
}

TEST_CASE("median and number formatting") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(1e-20) == "1e-20");
}

TEST_CASE("benchmark inputs") {
  const ComplexVector a = benchmark_vector(1, 4, 3), b = benchmark_vector(1, 4, 3), c = benchmark_vector(2, 4, 3);
  CHECK(a == b);
  CHECK(a != c);
  for (Index k = 0; k < 3; ++k) {
    CHECK(a(k).real() >= 0.0);
    CHECK(a(k).real() < 1.0);
    CHECK(a(k).imag() >= 0.0);
    CHECK(a(k).imag() < 1.0);
  }
  const BandlimitedSignal f = random_test_signal(9, 2, {-10, 10});
  CHECK(f.n_min() == -10);
  CHECK(f.n_max() == 10);
  CHECK(f.coefficient(0) == Complex(0.0));
  CHECK(f.coefficient(3) != Complex(0.0));
  CHECK(random_test_signal(9, 3, {-10, 10}).coefficient(3) != f.coefficient(3));
}

TEST_CASE("summarize") {
  std::vector<TrialRecord> rs(4);
  rs[0].success = true;
  rs[0].iterations_to_threshold = 10;
  rs[1].success = true;
  rs[1].iterations_to_threshold = 30;
  rs[2].success = false;
  rs[3].success = true;
  rs[3].iterations_to_threshold = 50;
  BenchmarkSummary s = summarize(rs);
  CHECK(s.trials == 4);
  CHECK(s.success_count == 3);
  CHECK(s.success_rate == 0.75);
  CHECK(s.mean_iterations == 30.0);
  CHECK(s.median_iterations == 30.0);
  CHECK(verify_summary(s));
  s.success_count = 2;
  CHECK_FALSE(verify_summary(s));

  const BenchmarkSummary none = summarize(std::vector<TrialRecord>(3));
  CHECK(none.success_rate == 0.0);
  CHECK(std::isnan(none.mean_iterations));
  CHECK(verify_summary(none));
}

TEST_CASE("gs benchmark") {
  const BenchmarkSummary s = run_gs_benchmark(gs_config(60, 17));
  CHECK(s.trials == 60);
  CHECK(verify_summary(s));
  for (const auto& r : s.records) {
    CHECK(r.success == (r.final_epsilon < 1e-8));
    CHECK(r.success == r.iterations_to_threshold.has_value());
    CHECK(r.trace.residuals.size() == 900);
  }

  SUBCASE("thread count does not change the output") {
    ExperimentConfig c = gs_config(60, 17);
    c.threads = 4;
    CHECK(csv(run_gs_benchmark(c)) == csv(s));
  }

  SUBCASE("fewer trials give a prefix") {
    const BenchmarkSummary p = run_gs_benchmark(gs_config(20, 17));
    for (int i = 0; i < 20; ++i) {
      CHECK(p.records[static_cast<std::size_t>(i)].final_epsilon == s.records[static_cast<std::size_t>(i)].final_epsilon);
    }
  }

  SUBCASE("another seed differs") { CHECK(csv(run_gs_benchmark(gs_config(60, 18))) != csv(s)); }

  SUBCASE("residual classification") {
    ExperimentConfig c = gs_config(60, 17);
    c.residual_success = true;
    const BenchmarkSummary r = run_gs_benchmark(c);
    for (const auto& rec : r.records) CHECK(rec.success == (rec.final_residual < 1e-8));
  }

  SUBCASE("csv layout") {
    std::istringstream is(csv(s));
    std::string line;
    std::getline(is, line);
    CHECK(line == "trial_id,success,iterations_to_threshold,final_epsilon,final_residual");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 60);

    std::ostringstream traces;
    write_traces_csv(traces, run_gs_benchmark(gs_config(2, 17)));
    std::istringstream ts(traces.str());
    std::getline(ts, line);
    CHECK(line == "trial_id,restart_id,iteration,residual,epsilon");
    std::getline(ts, line);
    CHECK(line.rfind("0,0,1,", 0) == 0);
    rows = 1;
    while (std::getline(ts, line)) ++rows;
    CHECK(rows == 1800);
  }
}

TEST_CASE("experiment configuration") {
  ExperimentConfig c;
  CHECK_THROWS_AS(c.validate(), ValidationError);  // no seed
  c.seed = 1;
  CHECK_NOTHROW(c.validate());
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = ExperimentConfig{};
  c.seed = 1;
  c.pipeline.matrix = CprMatrix::from_real(RealMatrix::Identity(3, 3));
  CHECK_THROWS_AS(run_gs_benchmark(c), ValidationError);
}

TEST_CASE("end-to-end benchmark") {
  ExperimentConfig c;
  c.kind = ExperimentKind::kE2eBench;
  c.seed = 5;
  c.instances = 2;
  c.betas_per_instance = 2;
  c.pipeline.gs.restarts = 10;
  const E2eSummary s = run_e2e_benchmark(c);
  REQUIRE(s.instances.size() == 2);
  for (const auto& inst : s.instances) {
    REQUIRE(inst.errors.size() == 2);
    CHECK(inst.best_error == std::min(inst.errors[0], inst.errors[1]));
    for (double b : inst.betas) CHECK((b >= 0.0 && b < 1.0));
  }
  CHECK(s.max_best_error == std::max(s.instances[0].best_error, s.instances[1].best_error));
  CHECK(s.max_best_error < 0.2);

  std::ostringstream a, b;
  write_e2e_csv(a, s);
  c.threads = 3;
  write_e2e_csv(b, run_e2e_benchmark(c));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("instance_id,beta_index,beta,relative_error,is_best\n", 0) == 0);

  // beta draws are nested: the first draws of a longer run match
  c.betas_per_instance = 1;
  c.instances = 1;
  const E2eSummary one = run_e2e_benchmark(c);
  CHECK(one.instances[0].betas[0] == s.instances[0].betas[0]);
  CHECK(one.instances[0].errors[0] == s.instances[0].errors[0]);
}

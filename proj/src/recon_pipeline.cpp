#include "cpr/recon_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "cpr/finite_cpr.hpp"
#include "cpr/rng.hpp"

namespace cpr {

void PipelineConfig::validate(bool require_density) const {
  scheme.validate();
  gs.validate();
  if (static_cast<std::size_t>(matrix.dim()) != scheme.shifts.size())
    throw ValidationError("PipelineConfig: matrix has K = " + std::to_string(matrix.dim()) + " but scheme has " +
                          std::to_string(scheme.shifts.size()) + " shifts");
  if (!certify_cpr(matrix)) throw ValidationError("PipelineConfig: matrix does not do conjugate phase retrieval");
  if (require_density && shift_group_density(scheme) <= Rational(1))
    throw ValidationError("PipelineConfig: shift group density must exceed 1");
  if (columns.size() < 1) throw ValidationError("PipelineConfig: empty column window");
  if (support.size() < 1) throw ValidationError("PipelineConfig: empty support window");
  if (!(stitch_threshold > 0.0)) throw ValidationError("PipelineConfig: stitch_threshold must be > 0");
  if (!(clamp_tolerance >= 0.0)) throw ValidationError("PipelineConfig: clamp_tolerance must be >= 0");
  if (beta && !(*beta >= 0.0 && *beta < 1.0)) throw ValidationError("PipelineConfig: beta must lie in [0, 1)");
  for (Index m : measured_rows)
    if (m < 0 || m >= matrix.count()) throw ValidationError("PipelineConfig: measured row out of range");
}

PipelineConfig three_times_nyquist_config() {
  PipelineConfig c;
  c.scheme = ShiftScheme{{Rational(1), Rational(0), Rational(-1)}, Rational(1), Rational(0)};
  c.measured_rows = {0, 3, 4};
  c.columns = {-20, 20};
  return c;
}

std::vector<RowRelation> lattice_redundancy(const CprMatrix& V, const ShiftScheme& scheme) {
  scheme.validate();
  if (static_cast<std::size_t>(V.dim()) != scheme.shifts.size())
    throw DimensionError("lattice_redundancy: matrix/scheme dimension mismatch");

  using Term = std::pair<Rational, Complex>;
  auto pattern = [&](Index m) {
    std::vector<Term> p;
    for (Index k = 0; k < V.dim(); ++k)
      if (V.columns()(k, m) != Complex{}) p.emplace_back(scheme.shifts[static_cast<std::size_t>(k)], V.columns()(k, m));
    std::sort(p.begin(), p.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
    return p;
  };

  std::vector<RowRelation> rel(static_cast<std::size_t>(V.count()));
  for (Index m = 0; m < V.count(); ++m) {
    rel[static_cast<std::size_t>(m)] = {m, 0};
    const auto pm = pattern(m);
    for (Index base = 0; base < m && !pm.empty(); ++base) {
      if (rel[static_cast<std::size_t>(base)].base != base) continue;
      const auto pb = pattern(base);
      if (pb.size() != pm.size()) continue;
      const Rational delta = pm.front().first - pb.front().first;
      const Rational steps = delta / scheme.step;
      if (steps.denominator() != 1) continue;
      bool same = true;
      for (std::size_t i = 0; i < pm.size() && same; ++i)
        same = pm[i].first == pb[i].first + delta && pm[i].second == pb[i].second;
      if (same) {
        rel[static_cast<std::size_t>(m)] = {base, steps.numerator()};
        break;
      }
    }
  }
  return rel;
}

MagnitudeGrid generate_measurements(const BandlimitedSignal& f, const CprMatrix& V, const ShiftScheme& scheme,
                                    double offset, IndexRange indices) {
  if (static_cast<std::size_t>(V.dim()) != scheme.shifts.size())
    throw DimensionError("generate_measurements: matrix/scheme dimension mismatch");
  MagnitudeGrid R{indices.first, scheme.step, offset, RealMatrix(V.count(), indices.size())};
  std::vector<double> shifts;
  for (const auto& b : scheme.shifts) shifts.push_back(to_double(b));
  std::vector<Complex> fv(shifts.size());
  for (int n = indices.first; n <= indices.last; ++n) {
    const double t = R.point(n);
    for (std::size_t k = 0; k < shifts.size(); ++k) fv[k] = f(t + shifts[k]);
    for (Index m = 0; m < V.count(); ++m) {
      Complex acc{};
      for (Index k = 0; k < V.dim(); ++k) acc += std::conj(V.columns()(k, m)) * fv[static_cast<std::size_t>(k)];
      R.values(m, n - indices.first) = std::abs(acc);
    }
  }
  return R;
}

double redundancy_defect(const MagnitudeGrid& R, const std::vector<RowRelation>& relations) {
  double worst = 0.0;
  for (std::size_t m = 0; m < relations.size(); ++m) {
    const auto [base, d] = relations[m];
    if (base == static_cast<Index>(m)) continue;
    for (int n = R.n_min; n <= R.n_max(); ++n) {
      const std::int64_t nb = n + d;
      if (nb < R.n_min || nb > R.n_max()) continue;
      worst = std::max(worst, std::abs(R.at(static_cast<Index>(m), n) - R.at(base, static_cast<int>(nb))));
    }
  }
  return worst;
}

MagnitudeGrid generate_measurements(const BandlimitedSignal& f, const PipelineConfig& config) {
  if (!config.support.contains(IndexRange{f.n_min(), f.n_max()}) && !f.empty())
    throw ValidationError("generate_measurements: signal support [" + std::to_string(f.n_min()) + ", " +
                          std::to_string(f.n_max()) + "] exceeds configured window");
  MagnitudeGrid R = generate_measurements(f, config.matrix, config.scheme, to_double(config.scheme.offset),
                                          config.series_window);
  const double scale = 1.0 + R.values.maxCoeff();
  if (redundancy_defect(R, lattice_redundancy(config.matrix, config.scheme)) > 1e-12 * scale)
    throw std::logic_error("generate_measurements: lattice redundancy violated");
  return R;
}

namespace {

std::vector<Index> sampled_bases(const std::vector<RowRelation>& rel, const PipelineConfig& config) {
  std::vector<Index> bases;
  for (std::size_t m = 0; m < rel.size(); ++m)
    if (rel[m].base == static_cast<Index>(m)) bases.push_back(static_cast<Index>(m));
  if (!config.measured_rows.empty())
    for (Index b : bases)
      if (std::find(config.measured_rows.begin(), config.measured_rows.end(), b) == config.measured_rows.end())
        throw ValidationError("row " + std::to_string(b) + " is not a translate of any sampled row");
  return bases;
}

std::pair<std::int64_t, std::int64_t> offset_span(const std::vector<RowRelation>& rel) {
  std::int64_t lo = 0, hi = 0;
  for (const auto& r : rel) {
    lo = std::min(lo, r.offset_steps);
    hi = std::max(hi, r.offset_steps);
  }
  return {lo, hi};
}

std::uint64_t column_stream(std::uint64_t run_id, int n) {
  return (run_id << 32) ^ static_cast<std::uint32_t>(n);
}

}  // namespace

MagnitudeGrid shift_magnitudes(const MagnitudeGrid& R, double beta, const PipelineConfig& config) {
  if (R.step != Rational(1, 2) || R.offset != 0.0)
    throw ValidationError("shift_magnitudes: measurements must lie on the half-integer grid n/2");
  if (config.scheme.step != R.step) throw ValidationError("shift_magnitudes: scheme step must be 1/2");
  if (R.values.rows() != config.matrix.count())
    throw DimensionError("shift_magnitudes: grid has wrong number of rows");
  if (!(beta >= 0.0 && beta < 1.0)) throw ValidationError("shift_magnitudes: beta must lie in [0, 1)");

  const auto rel = lattice_redundancy(config.matrix, config.scheme);
  const auto bases = sampled_bases(rel, config);
  const auto [lo, hi] = offset_span(rel);
  if (config.columns.first + lo - 1 < R.n_min || config.columns.last + hi > R.n_max())
    throw ValidationError("shift_magnitudes: series window does not cover the column window");

  std::map<Index, HalfGridSamples> series;
  std::map<Index, double> tolerance;
  for (Index b : bases) {
    HalfGridSamples s{R.n_min, {}};
    s.values.reserve(static_cast<std::size_t>(R.values.cols()));
    for (Index i = 0; i < R.values.cols(); ++i) {
      const double v = R.values(b, i);
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("shift_magnitudes: magnitudes must be finite, >= 0");
      s.values.push_back(v * v);
    }
    const double peak = *std::max_element(s.values.begin(), s.values.end());
    tolerance[b] = std::max(1e-10, config.clamp_tolerance * peak);
    series.emplace(b, std::move(s));
  }

  MagnitudeGrid out{config.columns.first, R.step, -beta, RealMatrix(config.matrix.count(), config.columns.size())};
  for (Index m = 0; m < config.matrix.count(); ++m) {
    const auto [base, d] = rel[static_cast<std::size_t>(m)];
    std::vector<double> points;
    for (int n = config.columns.first; n <= config.columns.last; ++n)
      points.push_back(to_double(R.step * (n + d)) - beta);
    const auto sq = resample_magnitudes(series.at(base), points, tolerance.at(base));
    for (std::size_t i = 0; i < sq.size(); ++i) out.values(m, static_cast<Index>(i)) = std::sqrt(sq[i]);
  }
  return out;
}

std::vector<ColumnEstimate> columnwise_recover(const MagnitudeGrid& R_beta, const PipelineConfig& config,
                                               std::uint64_t run_id) {
  const PinvOperator op(config.matrix);
  if (R_beta.values.rows() != op.count()) throw DimensionError("columnwise_recover: grid has wrong number of rows");
  GsConfig gs = config.gs;
  gs.record_trace = false;
  std::vector<ColumnEstimate> out;
  out.reserve(static_cast<std::size_t>(R_beta.values.cols()));
  for (int n = R_beta.n_min; n <= R_beta.n_max(); ++n) {
    const auto best = gs_multistart(op, R_beta.column(n), gs, column_stream(run_id, n));
    ColumnEstimate c;
    c.index = n;
    c.estimate = best.estimate;
    c.residual = best.best_residual;
    c.best_restart = best.best_restart;
    c.restarts = best.restarts;
    out.push_back(std::move(c));
  }
  return out;
}

StitchResult stitch(std::vector<ColumnEstimate>& estimates, const PipelineConfig& config) {
  const auto& shifts = config.scheme.shifts;
  std::vector<std::int64_t> lattice;
  for (const auto& b : shifts) {
    const Rational e = b / config.scheme.step;
    if (e.denominator() != 1) throw ValidationError("stitch: shifts must lie on the sampling lattice");
    lattice.push_back(e.numerator());
  }
  const std::size_t K = lattice.size();

  // entry kp of column n-1 and entry kc of column n name the same point
  std::vector<std::pair<Index, Index>> overlap;
  for (std::size_t kp = 0; kp < K; ++kp)
    for (std::size_t kc = 0; kc < K; ++kc)
      if (lattice[kp] == lattice[kc] + 1) overlap.emplace_back(static_cast<Index>(kp), static_cast<Index>(kc));
  if (estimates.size() > 1 && overlap.size() < 2)
    throw ValidationError("stitch: consecutive columns share fewer than two entries");

  StitchResult out;
  if (estimates.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(lattice.begin(), lattice.end());
  out.j_min = static_cast<int>(estimates.front().index + *lo_it);
  const int j_max = static_cast<int>(estimates.back().index + *hi_it);
  std::vector<Complex> sum(static_cast<std::size_t>(j_max - out.j_min + 1));
  std::vector<int> hits(sum.size(), 0);

  for (std::size_t c = 0; c < estimates.size(); ++c) {
    ColumnEstimate& cur = estimates[c];
    if (static_cast<Index>(cur.estimate.size()) != static_cast<Index>(K))
      throw DimensionError("stitch: estimate has wrong length");
    if (c > 0 && cur.index != estimates[c - 1].index + 1) throw ValidationError("stitch: columns must be consecutive");

    if (c == 0) {
      cur.conjugated = false;
      cur.phase = 1.0;
    } else {
      const ComplexVector& prev = out.aligned.back();
      double overlap_norm2 = 0.0;
      for (auto [kp, kc] : overlap) overlap_norm2 += std::norm(prev(kp));

      if (std::all_of(overlap.begin(), overlap.end(), [&](auto p) { return std::abs(prev(p.first)) < 1e-10; })) {
        cur.conjugated = estimates[c - 1].conjugated;
        cur.phase = estimates[c - 1].phase;
        out.degenerate_columns.push_back(cur.index);
      } else {
        const Complex a0 = prev(overlap[0].first), a1 = prev(overlap[1].first);
        const double det = std::abs(a0 * std::conj(a1) - std::conj(a0) * a1);
        if (det < config.stitch_threshold * overlap_norm2) out.ambiguous_columns.push_back(cur.index);

        double best_mismatch = 0.0;
        for (int conj = 0; conj < 2; ++conj) {
          const ComplexVector w = conj ? ComplexVector(cur.estimate.conjugate()) : cur.estimate;
          Complex z{};
          for (auto [kp, kc] : overlap) z += std::conj(w(kc)) * prev(kp);
          const Complex lambda = std::abs(z) > 0.0 ? z / std::abs(z) : Complex(1.0);
          double mismatch = 0.0;
          for (auto [kp, kc] : overlap) mismatch += std::norm(prev(kp) - lambda * w(kc));
          if (conj == 0 || mismatch < best_mismatch) {
            best_mismatch = mismatch;
            cur.conjugated = conj == 1;
            cur.phase = lambda;
          }
        }
      }
    }

    ComplexVector aligned = cur.conjugated ? ComplexVector(cur.estimate.conjugate()) : cur.estimate;
    aligned *= cur.phase;
    for (std::size_t k = 0; k < K; ++k) {
      const auto j = static_cast<std::size_t>(cur.index + lattice[k] - out.j_min);
      sum[j] += aligned(static_cast<Index>(k));
      ++hits[j];
    }
    out.aligned.push_back(std::move(aligned));
  }

  out.samples.resize(sum.size());
  for (std::size_t j = 0; j < sum.size(); ++j) out.samples[j] = hits[j] ? sum[j] / double(hits[j]) : Complex{};
  return out;
}

BandlimitedSignal assemble_signal(std::span<const Complex> samples, std::span<const double> points,
                                  IndexRange support, double max_condition) {
  if (samples.size() != points.size()) throw DimensionError("assemble_signal: samples/points length mismatch");
  const int width = support.size();
  if (width < 1) throw ValidationError("assemble_signal: empty support");
  if (samples.size() < 2 * static_cast<std::size_t>(width))
    throw ValidationError("assemble_signal: need at least " + std::to_string(2 * width) + " samples, got " +
                          std::to_string(samples.size()));

  const auto N = static_cast<Index>(samples.size());
  RealMatrix A(N, width);
  ComplexVector b(N);
  for (Index i = 0; i < N; ++i) {
    b(i) = samples[static_cast<std::size_t>(i)];
    for (int k = 0; k < width; ++k) A(i, k) = sinc(points[static_cast<std::size_t>(i)] - (support.first + k));
  }
  Eigen::JacobiSVD<RealMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  const double cond2 = smin > 0.0 ? (s(0) / smin) * (s(0) / smin) : INFINITY;
  if (cond2 > max_condition)
    throw IllConditionedError("assemble_signal: normal equations have condition number " + std::to_string(cond2));

  const ComplexVector utb = svd.matrixU().transpose().cast<Complex>() * b;
  const ComplexVector c = svd.matrixV().cast<Complex>() * (utb.array() / s.array().cast<Complex>()).matrix();
  return BandlimitedSignal(support.first, std::vector<Complex>(c.data(), c.data() + c.size()));
}

std::vector<double> error_grid() {
  std::vector<double> t;
  for (int i = -40; i <= 40; ++i) t.push_back(0.5 * i);
  return t;
}

double relative_error(const BandlimitedSignal& f, const BandlimitedSignal& r) {
  const auto grid = error_grid();
  const auto n = static_cast<Index>(grid.size());
  ComplexVector fs(n), rs(n);
  for (Index i = 0; i < n; ++i) {
    fs(i) = f(grid[static_cast<std::size_t>(i)]);
    rs(i) = r(grid[static_cast<std::size_t>(i)]);
  }
  const double norm = fs.squaredNorm();  // ||ff*||_F = ||f||^2
  if (norm == 0.0) throw ValidationError("relative_error: ground truth vanishes on the error grid");
  return cpr_distance(fs, rs) / norm;
}

double resolve_beta(const PipelineConfig& config, std::uint64_t run_id) {
  if (config.beta) return *config.beta;
  CounterRng rng(config.gs.rng_seed, Stream::kBeta, run_id);
  return rng.uniform();
}

namespace {

ReconstructionResult reconstruct_from_shifted(const MagnitudeGrid& R_beta, double beta, const PipelineConfig& config,
                                              std::uint64_t run_id) {
  ReconstructionResult out;
  out.beta = beta;
  out.columns = columnwise_recover(R_beta, config, run_id);
  const StitchResult st = stitch(out.columns, config);
  out.ambiguous_columns = st.ambiguous_columns;
  out.degenerate_columns = st.degenerate_columns;
  out.samples = st.samples;
  for (std::size_t j = 0; j < st.samples.size(); ++j)
    out.points.push_back(to_double(config.scheme.step * (st.j_min + static_cast<std::int64_t>(j))) - beta);
  out.estimate = assemble_signal(out.samples, out.points, config.support);
  return out;
}

}  // namespace

ReconstructionResult run_algorithm1(const MagnitudeGrid& R, const PipelineConfig& config, std::uint64_t run_id) {
  config.validate();
  const double beta = resolve_beta(config, run_id);
  return reconstruct_from_shifted(shift_magnitudes(R, beta, config), beta, config, run_id);
}

ReconstructionResult run_algorithm1(const BandlimitedSignal& f, const PipelineConfig& config, std::uint64_t run_id) {
  config.validate();
  ReconstructionResult out = run_algorithm1(generate_measurements(f, config), config, run_id);
  out.relative_error = relative_error(f, out.estimate);
  return out;
}

ReconstructionResult run_algorithm2(const BandlimitedSignal& f, double beta, const PipelineConfig& config,
                                    std::uint64_t run_id) {
  config.validate(false);
  if (!(beta >= 0.0 && beta < 1.0)) throw ValidationError("run_algorithm2: beta must lie in [0, 1)");
  if (!config.support.contains(IndexRange{f.n_min(), f.n_max()}) && !f.empty())
    throw ValidationError("run_algorithm2: signal support exceeds configured window");

  const auto rel = lattice_redundancy(config.matrix, config.scheme);
  const auto bases = sampled_bases(rel, config);
  const auto [lo, hi] = offset_span(rel);

  // Only the base rows are sampled, at t = n * step - beta.
  const IndexRange needed{static_cast<int>(config.columns.first + lo), static_cast<int>(config.columns.last + hi)};
  const MagnitudeGrid sampled =
      generate_measurements(f, config.matrix.select_columns(bases), config.scheme, -beta, needed);

  MagnitudeGrid R_beta{config.columns.first, config.scheme.step, -beta,
                       RealMatrix(config.matrix.count(), config.columns.size())};
  for (Index m = 0; m < config.matrix.count(); ++m) {
    const auto [base, d] = rel[static_cast<std::size_t>(m)];
    const auto row = static_cast<Index>(std::find(bases.begin(), bases.end(), base) - bases.begin());
    for (int n = config.columns.first; n <= config.columns.last; ++n)
      R_beta.values(m, n - config.columns.first) = sampled.at(row, static_cast<int>(n + d));
  }

  ReconstructionResult out = reconstruct_from_shifted(R_beta, beta, config, run_id);
  out.relative_error = relative_error(f, out.estimate);
  return out;
}

}  // namespace cpr

#include "cpr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cpr/experiments.hpp"

namespace cpr {

namespace {

double parse_real(std::string_view s, const std::string& context) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("malformed number '" + std::string(s) + "' in " + context);
  return v;
}

long parse_integer(std::string_view s, const std::string& context) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("malformed integer '" + std::string(s) + "' in " + context);
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

}  // namespace

Complex parse_matrix_entry(const std::string& token) {
  const std::string ctx = "matrix entry '" + token + "'";
  if (token.empty()) throw ParseError("empty " + ctx);
  if (token.back() != 'j') return {parse_real(token, ctx), 0.0};
  // split at the sign that starts the imaginary part (not a leading sign, not an exponent sign)
  for (std::size_t i = token.size() - 1; i-- > 1;) {
    const char c = token[i];
    if ((c == '+' || c == '-') && token[i - 1] != 'e' && token[i - 1] != 'E') {
      const std::string_view whole(token);
      return {parse_real(whole.substr(0, i), ctx), parse_real(whole.substr(i, token.size() - 1 - i), ctx)};
    }
  }
  throw ParseError("expected re or re+imj in " + ctx);
}

CprMatrix parse_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix file: missing 'K M' header");
  std::istringstream header(line);
  std::string ks, ms, extra;
  if (!(header >> ks >> ms) || (header >> extra)) throw ParseError("matrix file: header must be 'K M'");
  const long K = parse_integer(ks, "matrix header"), M = parse_integer(ms, "matrix header");
  if (K < 1 || M < 1) throw ParseError("matrix file: K and M must be positive");

  ComplexMatrix V(K, M);
  for (long k = 0; k < K; ++k) {
    if (!std::getline(in, line)) throw ParseError("matrix file: expected " + std::to_string(K) + " rows");
    std::istringstream row(line);
    std::string tok;
    long m = 0;
    for (; row >> tok; ++m) {
      if (m >= M) throw ParseError("matrix file: row " + std::to_string(k + 1) + " has more than M entries");
      V(k, m) = parse_matrix_entry(tok);
    }
    if (m != M) throw ParseError("matrix file: row " + std::to_string(k + 1) + " has " + std::to_string(m) + " entries");
  }
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("matrix file: trailing content");
  return CprMatrix(std::move(V));
}

CprMatrix read_matrix_file(const std::string& path) {
  auto in = open_input(path);
  return parse_matrix(in);
}

void write_matrix(std::ostream& os, const CprMatrix& V) {
  os << V.dim() << ' ' << V.count() << '\n';
  for (Index k = 0; k < V.dim(); ++k) {
    for (Index m = 0; m < V.count(); ++m) {
      const Complex z = V.columns()(k, m);
      if (m) os << ' ';
      os << format_number(z.real());
      if (z.imag() != 0.0) os << (z.imag() < 0 ? "" : "+") << format_number(z.imag()) << 'j';
    }
    os << '\n';
  }
}

BandlimitedSignal parse_signal(std::istream& in) {
  std::map<long, Complex> coeffs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string ns, re, im, extra;
    const std::string ctx = "signal line " + std::to_string(lineno);
    if (!(ls >> ns >> re >> im) || (ls >> extra)) throw ParseError(ctx + ": expected 'n re im'");
    const long n = parse_integer(ns, ctx);
    if (!coeffs.emplace(n, Complex(parse_real(re, ctx), parse_real(im, ctx))).second)
      throw ParseError(ctx + ": duplicate index " + std::to_string(n));
  }
  if (coeffs.empty()) return {};
  const long lo = coeffs.begin()->first, hi = coeffs.rbegin()->first;
  std::vector<Complex> c(static_cast<std::size_t>(hi - lo + 1));
  for (const auto& [n, z] : coeffs) c[static_cast<std::size_t>(n - lo)] = z;
  return BandlimitedSignal(static_cast<int>(lo), std::move(c));
}

BandlimitedSignal read_signal_file(const std::string& path) {
  auto in = open_input(path);
  return parse_signal(in);
}

void write_signal(std::ostream& os, const BandlimitedSignal& f) {
  for (int n = f.n_min(); n <= f.n_max() && !f.empty(); ++n) {
    const Complex z = f.coefficient(n);
    os << n << ' ' << format_number(z.real()) << ' ' << format_number(z.imag()) << '\n';
  }
}

void write_samples_csv(std::ostream& os, const ReconstructionResult& result) {
  os << "t,re,im\n";
  for (std::size_t i = 0; i < result.samples.size(); ++i)
    os << format_number(result.points[i]) << ',' << format_number(result.samples[i].real()) << ','
       << format_number(result.samples[i].imag()) << '\n';
}

void write_reconstruction_json(std::ostream& os, const ReconstructionResult& result, const PipelineConfig& config) {
  using nlohmann::json;
  auto rational = [](const Rational& r) { return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator()); };

  json cfg;
  std::ostringstream mat;
  write_matrix(mat, config.matrix);
  cfg["matrix"] = mat.str();
  for (const auto& b : config.scheme.shifts) cfg["shifts"].push_back(rational(b));
  cfg["step"] = rational(config.scheme.step);
  cfg["columns"] = {config.columns.first, config.columns.last};
  cfg["series_window"] = {config.series_window.first, config.series_window.last};
  cfg["support"] = {config.support.first, config.support.last};
  cfg["gs"] = {{"max_iterations", config.gs.max_iterations},
               {"tolerance", config.gs.tolerance},
               {"restarts", config.gs.restarts},
               {"seed", config.gs.rng_seed}};
  cfg["stitch_threshold"] = config.stitch_threshold;

  json cols = json::array();
  for (const auto& c : result.columns)
    cols.push_back({{"index", c.index},
                    {"residual", c.residual},
                    {"best_restart", c.best_restart},
                    {"restarts", c.restarts},
                    {"conjugated", c.conjugated}});

  json coeffs = json::array();
  for (int n = result.estimate.n_min(); n <= result.estimate.n_max() && !result.estimate.empty(); ++n) {
    const Complex z = result.estimate.coefficient(n);
    coeffs.push_back({n, z.real(), z.imag()});
  }

  json doc{{"config", cfg},
           {"beta", result.beta},
           {"columns", cols},
           {"coefficients", coeffs},
           {"ambiguous_columns", result.ambiguous_columns},
           {"degenerate_columns", result.degenerate_columns}};
  doc["relative_error"] = result.relative_error ? json(*result.relative_error) : json(nullptr);
  os << doc.dump(2) << '\n';
}

}  // namespace cpr

#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "cpr/pw_signal.hpp"
#include "cpr/recon_pipeline.hpp"
#include "cpr/types.hpp"

namespace cpr {

/// Thrown for malformed input files; a ValidationError (CLI exit code 1).
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// "K M" header, then K lines of M entries, each "re" or "re+imj" / "re-imj".
CprMatrix parse_matrix(std::istream& in);
CprMatrix read_matrix_file(const std::string& path);
/// Single entry in the matrix-file syntax.
Complex parse_matrix_entry(const std::string& token);
void write_matrix(std::ostream& os, const CprMatrix& V);

/// Lines "n re im"; absent n are zero coefficients. Blank lines and lines
/// starting with '#' are skipped.
BandlimitedSignal parse_signal(std::istream& in);
BandlimitedSignal read_signal_file(const std::string& path);
void write_signal(std::ostream& os, const BandlimitedSignal& f);

/// Recovered samples as CSV rows t,re,im.
void write_samples_csv(std::ostream& os, const ReconstructionResult& result);

/// JSON document: config echo, beta, per-column residuals, coefficients, error metrics.
void write_reconstruction_json(std::ostream& os, const ReconstructionResult& result, const PipelineConfig& config);

}  // namespace cpr

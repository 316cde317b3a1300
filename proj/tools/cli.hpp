#pragma once

#include <ostream>

namespace cpr {

/// Exit codes: 0 success, 1 validation error (bad flag, malformed file, failed
/// precondition), 2 runtime/data error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpr

#pragma once

#include <iosfwd>

namespace jsdmi {

/// Exit codes of the jsdmi command-line tool. CLI11 parse errors keep their
/// own nonzero codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,        // I/O or other runtime error
  kExitDomain = 2,         // argument outside the domain of the operation
  kExitConfig = 3,         // unreadable or invalid config
  kExitNotCertified = 4,   // certify found a non-negative determinant
};

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jsdmi

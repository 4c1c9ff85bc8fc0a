#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one subcommand. `args` excludes the program name. Results go to
/// `out`, diagnostics to `err`. Returns 0 on success, 1 on usage,
/// validation or parse errors and 2 on file system errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conseg

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace diacdm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kRuntimeError = 3 };

/// Runs one subcommand. `args` excludes the program name. Results go to
/// `out`, logs and error messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace diacdm::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mts::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Runs one `mts` command line. args[0] is the program name. Progress goes to
/// `out`; usage text and errors go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mts::cli

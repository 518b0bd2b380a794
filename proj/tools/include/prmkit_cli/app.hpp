#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prmkit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kBackend = 3 };

// Runs one prmkit command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prmkit::cli

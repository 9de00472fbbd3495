#pragma once

#include <string>
#include <vector>

namespace fracsing {

enum ExitCode { kOk = 0, kUsage = 2, kNonConvergence = 3 };

/// Entry point behind the fracsing executable; argv[0] is the program name.
int run_command(const std::vector<std::string>& argv);

}  // namespace fracsing

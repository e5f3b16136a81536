#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bridgeintent::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kNumerical = 4 };

/// Runs one command line (without the program name). Results go to files or
/// `out`; diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace bridgeintent::cli

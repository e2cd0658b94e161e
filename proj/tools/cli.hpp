#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lattes_forge::cli {

// Exit codes: 0 success, 1 usage or parse error, 2 verification failure
// (lemma violation, not PCF, not repelling, numerical breakdown), 3 a
// requested k beyond double precision.
enum ExitCode { kOk = 0, kUsage = 1, kFailed = 2, kPrecision = 3 };

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lattes_forge::cli

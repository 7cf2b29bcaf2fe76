#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdesym {

/// Exit codes: 0 pass, 1 check failed, 2 usage/config/parse error, 3 numerical failure.
/// Report JSON goes to --out when given (summary on `out`), otherwise to `out` with
/// the summary on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdesym

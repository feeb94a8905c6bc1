#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wtp::cli {

// Entry point shared by the executable and the tests. `args` excludes the
// program name. Returns the process exit code: 0 success, 1 runtime or data
// error, 2 usage error. Failures print one `error[CODE]: ...` line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Plot series accepted by `plotdata --series`.
std::vector<std::string> plot_series_names();

}  // namespace wtp::cli

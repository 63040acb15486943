#ifndef BCPVS_CLI_HPP
#define BCPVS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace bcpvs {

/// Exit codes: 0 success, 1 unexpected failure, 2 configuration, 3 input/output,
/// 4 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bcpvs

#endif  // BCPVS_CLI_HPP

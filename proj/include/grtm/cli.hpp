#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grtm {

/// Entry point of the `grtm` command line tool. args[0] is the program name,
/// args[1] the subcommand (simulate, fit, predict, eval, topics). Data goes to
/// `out`, diagnostics to `err`. Returns the process exit code: 0 on success,
/// 2 for usage errors, 1 for any other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace grtm

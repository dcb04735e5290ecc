#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nlostrack::io {

/// Entry point behind the nlostrack binary. Subcommands: simulate, campaign,
/// report, validate-config. Returns the process exit code.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace nlostrack::io

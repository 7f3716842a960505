#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fluororeg {

/// Subcommands synth, discal, sical, register, evaluate, serve.
/// Returns 0 on success, 1 on a domain error, 2 on a usage error.
int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fluororeg

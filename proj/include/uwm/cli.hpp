// cli.hpp - command-line entry point, callable in-process for testing
#pragma once

#include <string>
#include <vector>

namespace uwm::cli {

// Parse and execute one command invocation (subcommand first, then flags).
// Returns the process exit code: 0 on success, nonzero after printing a
// diagnostic to stderr. The binary's main() forwards its arguments here.
int cli_main(const std::vector<std::string>& args);

}  // namespace uwm::cli

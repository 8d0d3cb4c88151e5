#pragma once

namespace snn {

/// Entry point for the snn command-line tool. Returns 0 on success, 1 on
/// usage or validation failure, 2 when a verification subcommand ran but
/// found failures.
int run_cli(int argc, const char* const* argv);

} // namespace snn

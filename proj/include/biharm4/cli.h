#pragma once

// Command-line entry point; see run_cli for the subcommand/exit-code contract.

namespace biharm4 {

// Exit status: 0 all checks pass, 1 verification failure, 2 invalid
// config/flags. Honors the BIHARM4_THREADS environment variable.
int run_cli(int argc, const char* const* argv);

} // namespace biharm4

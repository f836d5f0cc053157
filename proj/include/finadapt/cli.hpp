#pragma once

namespace finadapt::cli {

// Multi-command entry point. Exit codes: 0 success, 1 usage error, 2 data
// or I/O error.
int run(int argc, const char* const* argv);

} // namespace finadapt::cli

#pragma once

namespace pgs::cli {

// Full command-line entry point (subcommand dispatch included). Returns the
// process exit status: 0 success, 1 runtime failure, 2 usage/config error.
int run(int argc, const char *const *argv);

}  // namespace pgs::cli

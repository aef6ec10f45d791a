#ifndef PAIRCTX_TOOLS_CLI_H_
#define PAIRCTX_TOOLS_CLI_H_

#include <iosfwd>

namespace pairctx::cli {

// Entry point of `pairctx-re`. Returns the process exit code: 0 on success,
// 1 when a stage fails, 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace pairctx::cli

#endif  // PAIRCTX_TOOLS_CLI_H_

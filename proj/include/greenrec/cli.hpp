#ifndef GREENREC_CLI_HPP_
#define GREENREC_CLI_HPP_

#include <iosfwd>

namespace greenrec {

/// Entry point of the `greenrec` tool. Returns the process exit code:
/// 0 on success, 1 on operational failure, 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace greenrec

#endif  // GREENREC_CLI_HPP_

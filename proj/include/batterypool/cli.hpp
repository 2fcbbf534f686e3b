#pragma once

#include <iosfwd>

namespace bpool {

/// Entry point of the command-line tool. Returns 0 on success, 2 on usage
/// errors and 1 on any other failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bpool

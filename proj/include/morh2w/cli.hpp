#pragma once

#include <iosfwd>

namespace morh2w {

/// Entry point of the morh2w tool. Exit codes: 0 success, 1 usage or input
/// error (help goes to `err`), 2 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace morh2w

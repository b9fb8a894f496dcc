#pragma once

#include <iosfwd>

namespace fabula {

/// Exit codes: 0 success, 1 user error, 2 backend error.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace fabula

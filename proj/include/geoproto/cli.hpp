#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geoproto {

/// Exit codes: 0 success, 1 validation error (bad input, config or flags),
/// 2 runtime error.
int run(int argc, const char* const* argv);

/// Same, with arguments excluding the program name and explicit streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geoproto

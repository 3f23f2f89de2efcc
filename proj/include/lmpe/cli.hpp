#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lmpe::cli {

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 1 evaluation-level failure, 2 usage/config error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lmpe::cli

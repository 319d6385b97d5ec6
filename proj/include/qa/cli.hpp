#pragma once

#include <iosfwd>

namespace qa::cli {

// Exit codes: 0 success, 1 domain or pipeline error, 2 I/O or usage error.
inline constexpr int kOk = 0;
inline constexpr int kDomainError = 1;
inline constexpr int kUsageError = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qa::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dephase::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_computation = 3;

// Full command line, argv[0] included. Output files go under --out; nothing
// is written unless every step succeeds.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace dephase::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hrc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Entry point of the hrcplan tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hrc

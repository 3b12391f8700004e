#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mbsf {

/// Entry point of the `mbsf` tool. `args` excludes the program name.
/// Returns 0 on success, 2 on a usage error and 1 on any other failure; failures
/// print one `error kind=<kind> msg="<text>"` line to `err`.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "MBSF_OUT_DIR";

}  // namespace mbsf

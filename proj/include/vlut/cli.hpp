#pragma once

#include <iosfwd>

namespace vlut::cli {

// Exit codes: 0 success, 1 runtime or domain failure, 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace vlut::cli

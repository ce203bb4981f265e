#pragma once

#include <iosfwd>

namespace connsim {

/// Entry point of the `connsim` executable. Returns 0 on success, 1 on
/// domain errors, 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace connsim

#pragma once

#include <ostream>

namespace smq::cli {

/// Runs the command line front end. Returns 0 on success, 1 when a model
/// fails validation and 2 on any other error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smq::cli

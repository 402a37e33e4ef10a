#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nntree/pwl.hpp"

namespace nntree::cli {

/// Process exit codes.
enum ExitCode : int {
  ok = 0,
  usage = 2,
  training_failure = 3,
  resource_limit = 4,
  verification_failure = 5,
  io_error = 6,
};

struct Architecture {
  std::vector<int> sizes;
  PwlActivation activation = PwlActivation::leaky_relu(0.3);
};

/// Parses "1-2-2-1:lrelu0.3". Activations: relu, lrelu[slope], htanh,
/// qtanh[regions], identity. Throws std::invalid_argument when malformed.
Architecture parse_architecture(const std::string& text);

/// Runs the command line `argv` and returns its exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nntree::cli

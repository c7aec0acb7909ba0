#pragma once

#include <stdexcept>
#include <string>

namespace mmsf {

// Root of every exception thrown by the framework. Subsystems derive their
// own categories so callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmsf

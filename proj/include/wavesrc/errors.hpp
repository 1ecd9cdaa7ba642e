#pragma once

#include <stdexcept>
#include <string>

namespace wavesrc {

// Raised when caller-supplied input violates a documented precondition or
// invariant. The CLI maps it to exit code 2; everything else maps to 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace wavesrc

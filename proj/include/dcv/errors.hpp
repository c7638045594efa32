#pragma once

#include <stdexcept>
#include <string>

namespace dcv {

/// Unreadable, truncated or malformed input files.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Failures of a numerical routine (non-convergence, degenerate model).
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace dcv

#pragma once

#include <stdexcept>
#include <string>

namespace molflow {

// Thrown when an iterative numerical procedure fails to converge or a
// training loss becomes non-finite. CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace molflow

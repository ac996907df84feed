#pragma once

#include <stdexcept>
#include <string>

namespace fpats {

// Base class for every recoverable failure raised by the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fpats

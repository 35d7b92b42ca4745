#pragma once

#include <stdexcept>
#include <string>

namespace topicblocks {

/// Malformed or out-of-domain input supplied by the caller.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal bookkeeping disagrees with the data it summarizes.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace topicblocks

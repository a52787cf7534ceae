#pragma once

#include <stdexcept>
#include <string>

namespace remn {

// Invalid input shapes, ranges or options. The CLI maps this to exit code 2.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// An operation was called on an object in the wrong state (empty bank,
// non-divisible compression length, ...). The CLI maps this to exit code 3.
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace remn

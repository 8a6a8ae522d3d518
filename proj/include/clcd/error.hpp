#pragma once

#include <stdexcept>
#include <string>

namespace clcd {

// Thrown for invalid inputs (malformed files, violated preconditions).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace clcd

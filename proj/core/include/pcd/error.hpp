#pragma once

#include <stdexcept>
#include <string>

namespace pcd {

// Raised for contract violations and invalid inputs anywhere in the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pcd

#pragma once

#include <string>
#include <vector>

namespace pcd {

// Language command; target_labels name the task-relevant objects.
struct Instruction {
  std::string text;
  std::vector<std::string> target_labels;

  void validate() const;
  bool operator==(const Instruction&) const = default;
};

}  // namespace pcd

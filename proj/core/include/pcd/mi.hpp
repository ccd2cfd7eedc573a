#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "pcd/harness.hpp"

namespace pcd {

struct MIReport {
  double mi_action_vs_spurious = 0.0;  // bits
  double mi_action_vs_target = 0.0;    // bits
  double entropy_action = 0.0;
  double entropy_spurious = 0.0;
  double entropy_target = 0.0;
  std::size_t samples = 0;
};

// Plug-in mutual information in bits between two paired discrete variables.
// Constant variables give 0.
double plugin_mutual_information(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y);
double plugin_entropy(std::span<const std::uint64_t> x);

// Quadrant of a displacement: bit 0 set when x >= 0, bit 1 when y >= 0.
std::uint64_t quadrant(Vec2 offset);

// Rolls out n_rollouts greedy baseline episodes and measures, over every
// step, the dependence of the executed action's bin tuple on
//  - the spurious factor: quadrant of the light relative to the subject, and
//  - the target direction: quadrant of the subject relative to the gripper.
MIReport estimate_mi(const PolicySpec& policy, const TaskSpec& task, const ShiftSpec& shift,
                     std::size_t n_rollouts, std::uint64_t seed, const KdeConfig& kde = {},
                     const WorldConfig& world = {});

}  // namespace pcd

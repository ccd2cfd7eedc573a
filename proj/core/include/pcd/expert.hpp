#pragma once

#include <optional>
#include <vector>

#include "pcd/raster.hpp"
#include "pcd/simworld.hpp"

namespace pcd {

enum class GripCommand { kOpen, kClose, kHold };

double grip_value(GripCommand cmd);

// What a controller knows about the scene, either ground truth or perceived.
struct ControllerState {
  Vec2 gripper;
  bool gripper_closed = false;
  std::optional<Vec2> subject;
  std::optional<Vec2> goal;
  bool holding = false;
};

struct ControlOutput {
  Vec2 displacement;
  GripCommand grip = GripCommand::kHold;
};

struct ControllerLimits {
  double step_max = 0.05;
  double grasp_radius = 0.04;
  double success_radius = 0.05;
};

// Proportional step toward the current subgoal (subject, then goal), clipped
// per axis to step_max, with the gripper command of the task phase.
// Requires state.subject; pick-style tasks also need state.goal.
ControlOutput subgoal_control(TaskKind kind, const ControllerState& state,
                              const ControllerLimits& limits);

// Oracle controller reading the simulator state directly.
class ScriptedExpert {
 public:
  explicit ScriptedExpert(const World& world) : world_(world) {}

  std::vector<double> act(const Scene& scene) const;

 private:
  const World& world_;
};

}  // namespace pcd

#include "pcd/expert.hpp"

#include <algorithm>

#include "pcd/error.hpp"

namespace pcd {
namespace {

Vec2 clipped_step(Vec2 from, Vec2 to, double step_max) {
  return {std::clamp(to.x - from.x, -step_max, step_max),
          std::clamp(to.y - from.y, -step_max, step_max)};
}

}  // namespace

double grip_value(GripCommand cmd) {
  switch (cmd) {
    case GripCommand::kOpen: return kGripOpen;
    case GripCommand::kClose: return kGripClose;
    case GripCommand::kHold: return kGripHold;
  }
  return kGripHold;
}

ControlOutput subgoal_control(TaskKind kind, const ControllerState& state,
                              const ControllerLimits& limits) {
  if (!state.subject) throw Error("subgoal_control: subject position unknown");
  const Vec2 subject = *state.subject;

  if (kind == TaskKind::kReach) {
    if (distance(state.gripper, subject) <= limits.success_radius) {
      return {{0.0, 0.0}, GripCommand::kHold};
    }
    return {clipped_step(state.gripper, subject, limits.step_max), GripCommand::kHold};
  }

  if (!state.goal) throw Error("subgoal_control: goal position unknown");
  const Vec2 goal = *state.goal;
  if (state.holding) {
    if (distance(state.gripper, goal) <= 0.5 * limits.success_radius) {
      return {{0.0, 0.0}, GripCommand::kOpen};
    }
    return {clipped_step(state.gripper, goal, limits.step_max), GripCommand::kClose};
  }
  // Already placed: stay put.
  if (distance(subject, goal) <= limits.success_radius) return {{0.0, 0.0}, GripCommand::kHold};
  if (distance(state.gripper, subject) <= 0.5 * limits.grasp_radius) {
    // A closed, empty gripper must reopen before it can grasp.
    return {{0.0, 0.0}, state.gripper_closed ? GripCommand::kOpen : GripCommand::kClose};
  }
  return {clipped_step(state.gripper, subject, limits.step_max), GripCommand::kOpen};
}

std::vector<double> ScriptedExpert::act(const Scene& scene) const {
  const TaskSpec& task = world_.task();
  const SceneObject* subject = scene.find(task.subject());
  if (subject == nullptr) throw Error("expert: subject missing from scene");

  ControllerState state;
  state.gripper = scene.gripper;
  state.gripper_closed = scene.gripper_closed;
  state.subject = subject->position;
  if (task.kind != TaskKind::kReach) state.goal = world_.goal_position(scene);
  state.holding = scene.held_object && *scene.held_object == subject->label;

  const ControllerLimits limits{world_.config().step_max, world_.config().grasp_radius,
                                task.success_radius};
  const ControlOutput out = subgoal_control(task.kind, state, limits);
  return {out.displacement.x, out.displacement.y, grip_value(out.grip)};
}

}  // namespace pcd

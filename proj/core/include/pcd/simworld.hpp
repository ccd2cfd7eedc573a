#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pcd/instruction.hpp"
#include "pcd/raster.hpp"

namespace pcd {

// Plane-0 intensity of an object class. Throws on unknown labels.
double class_intensity(const std::string& label);
// Labels with a registered intensity, in palette order.
std::span<const std::string> palette_labels();

struct SceneObject {
  std::string label;
  Vec2 position;
  double radius = 0.05;
  double intensity = 0.0;
  bool graspable = true;

  bool operator==(const SceneObject&) const = default;
};

// Task-irrelevant scene factors.
struct SpuriousFactors {
  Vec2 light;
  double light_intensity = 0.6;
  double brightness = 0.25;
  int texture = 0;
  std::vector<SceneObject> distractors;

  bool operator==(const SpuriousFactors&) const = default;
};

struct Scene {
  Vec2 gripper{0.5, 0.5};
  bool gripper_closed = false;
  std::vector<SceneObject> objects;
  std::optional<std::string> held_object;
  SpuriousFactors spurious;
  std::size_t step = 0;
  bool terminated = false;

  const SceneObject* find(const std::string& label) const;
  SceneObject* find(const std::string& label);
  bool operator==(const Scene&) const = default;
};

enum class TaskKind { kReach, kPickPlace, kMoveNear, kStack };

const char* to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& name);

// A goal is either a fixed table position or the position of a labeled object.
using Goal = std::variant<Vec2, std::string>;

struct TaskSpec {
  TaskKind kind = TaskKind::kReach;
  Instruction instruction;
  Goal goal;
  double success_radius = 0.05;
  std::size_t max_steps = 40;

  // Object the task manipulates or reaches (first target label).
  const std::string& subject() const { return instruction.target_labels.front(); }
  void validate() const;
};

// Default task of each kind.
TaskSpec make_task(TaskKind kind);

struct NoShift {};
struct SpatialShift {};
struct BrightnessShift {
  double offset = 0.25;
};
struct DistractorShift {
  std::size_t count = 2;
  std::string label = "can";
};
struct TextureShift {
  int pattern = 1;
};
using ShiftSpec = std::variant<NoShift, SpatialShift, BrightnessShift, DistractorShift, TextureShift>;

std::string shift_name(const ShiftSpec& shift);
ShiftSpec parse_shift(const std::string& name);
void validate_shift(const ShiftSpec& shift);

struct StepResult {
  Observation observation;
  bool success_now = false;
  bool terminated = false;
  std::size_t step = 0;
};

struct WorldConfig {
  std::size_t width = 32;
  std::size_t height = 32;
  double step_max = 0.05;
  double grasp_radius = 0.04;
  double colocation_radius = 0.03;
  double light_sigma = 0.06;
  // When false the episode runs to max_steps regardless of success.
  bool terminate_on_success = true;
};

inline constexpr std::size_t kActionDims = 3;  // (dx, dy, gripper)

// Gripper command thresholds on the third action component.
inline constexpr double kGripThreshold = 1.0 / 3.0;
inline constexpr double kGripOpen = -0.5;
inline constexpr double kGripClose = 0.5;
inline constexpr double kGripHold = 0.0;

class World {
 public:
  World(TaskSpec task, ShiftSpec shift, WorldConfig config = {});

  const TaskSpec& task() const { return task_; }
  const ShiftSpec& shift() const { return shift_; }
  const WorldConfig& config() const { return config_; }

  std::pair<Scene, Observation> reset(std::uint64_t seed) const;
  std::pair<Scene, StepResult> step(const Scene& scene, std::span<const double> action) const;
  Observation render(const Scene& scene) const;

  bool success(const Scene& scene) const;
  // Resolved goal position for the scene.
  Vec2 goal_position(const Scene& scene) const;

 private:
  TaskSpec task_;
  ShiftSpec shift_;
  WorldConfig config_;
};

Observation render(const Scene& scene, const WorldConfig& config = {});

// Raster footprint of every object and distractor carrying `label`.
ObjectMask ground_truth_mask(const Scene& scene, const std::string& label,
                             const WorldConfig& config = {});

}  // namespace pcd

#include "pcd/simworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pcd/error.hpp"
#include "pcd/rng.hpp"

namespace pcd {
namespace {

struct PaletteEntry {
  const char* label;
  double intensity;
};

constexpr std::array<PaletteEntry, 7> kPalette{{
    // Goal classes outrank the blocks carried onto them, so a held block
    // never hides the place it is being put.
    {"yellow_block", 0.80},
    {"can", 0.70},
    {"green_block", 0.60},
    {"zone", 0.52},
    {"sponge", 0.44},
    {"red_block", 0.30},
    {"cup", 0.20},
}};

constexpr double kBlockRadius = 0.05;
constexpr double kZoneRadius = 0.07;
constexpr double kDistractorRadius = 0.04;
constexpr double kBaseBrightness = 0.25;
constexpr std::size_t kMaxPlacementAttempts = 1000;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool in_disk(Vec2 cell, const SceneObject& obj) {
  return distance(cell, obj.position) <= obj.radius;
}

double texture_value(int pattern, std::size_t x, std::size_t y) {
  switch (pattern) {
    case 0:
      return 0.5;
    case 1:
      return ((x / 4 + y / 4) % 2 == 0) ? 0.35 : 0.65;
    case 2:
      return (x % 4 < 2) ? 0.3 : 0.7;
    default: {
      std::uint64_t h = mix_seed((static_cast<std::uint64_t>(y) << 32) | x,
                                 static_cast<std::uint64_t>(pattern));
      return 0.3 + 0.4 * static_cast<double>(h >> 11) * 0x1.0p-53;
    }
  }
}

std::vector<std::string> scene_labels(const TaskSpec& task) {
  std::vector<std::string> labels = task.instruction.target_labels;
  if (const auto* goal_label = std::get_if<std::string>(&task.goal)) {
    if (std::find(labels.begin(), labels.end(), *goal_label) == labels.end()) {
      labels.push_back(*goal_label);
    }
  }
  // One filler block that is not part of the task.
  for (const char* filler : {"green_block", "red_block", "yellow_block"}) {
    if (std::find(labels.begin(), labels.end(), filler) == labels.end()) {
      labels.emplace_back(filler);
      break;
    }
  }
  return labels;
}

}  // namespace

void Instruction::validate() const {
  if (text.empty()) throw Error("instruction text must not be empty");
  if (target_labels.empty()) throw Error("instruction needs at least one target label");
}

double class_intensity(const std::string& label) {
  for (const auto& entry : kPalette) {
    if (label == entry.label) return entry.intensity;
  }
  throw Error("unknown object label '" + label + "'");
}

std::span<const std::string> palette_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (const auto& entry : kPalette) out.emplace_back(entry.label);
    return out;
  }();
  return labels;
}

const SceneObject* Scene::find(const std::string& label) const {
  for (const auto& obj : objects) {
    if (obj.label == label) return &obj;
  }
  return nullptr;
}

SceneObject* Scene::find(const std::string& label) {
  for (auto& obj : objects) {
    if (obj.label == label) return &obj;
  }
  return nullptr;
}

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kReach: return "reach";
    case TaskKind::kPickPlace: return "pick_place";
    case TaskKind::kMoveNear: return "move_near";
    case TaskKind::kStack: return "stack";
  }
  return "?";
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "reach") return TaskKind::kReach;
  if (name == "pick_place" || name == "pickplace") return TaskKind::kPickPlace;
  if (name == "move_near" || name == "movenear") return TaskKind::kMoveNear;
  if (name == "stack") return TaskKind::kStack;
  throw Error("unknown task kind '" + name + "'");
}

void TaskSpec::validate() const {
  instruction.validate();
  if (!(success_radius > 0.0)) throw Error("task success_radius must be > 0");
  if (max_steps < 1) throw Error("task max_steps must be >= 1");
  for (const auto& label : instruction.target_labels) class_intensity(label);
  if (const auto* label = std::get_if<std::string>(&goal)) class_intensity(*label);
}

TaskSpec make_task(TaskKind kind) {
  TaskSpec task;
  task.kind = kind;
  switch (kind) {
    case TaskKind::kReach:
      task.instruction = {"reach the red block", {"red_block"}};
      task.goal = std::string("red_block");
      task.success_radius = 0.05;
      task.max_steps = 40;
      break;
    case TaskKind::kPickPlace:
      task.instruction = {"put the red block in the zone", {"red_block"}};
      task.goal = std::string("zone");
      task.success_radius = 0.06;
      task.max_steps = 80;
      break;
    case TaskKind::kMoveNear:
      task.instruction = {"move the red block near the green block", {"red_block", "green_block"}};
      task.goal = std::string("green_block");
      task.success_radius = 0.08;
      task.max_steps = 80;
      break;
    case TaskKind::kStack:
      task.instruction = {"stack the green block on the yellow block",
                          {"green_block", "yellow_block"}};
      task.goal = std::string("yellow_block");
      task.success_radius = 0.04;
      task.max_steps = 120;
      break;
  }
  return task;
}

std::string shift_name(const ShiftSpec& shift) {
  return std::visit(Overloaded{
                        [](const NoShift&) { return std::string("none"); },
                        [](const SpatialShift&) { return std::string("spatial"); },
                        [](const BrightnessShift&) { return std::string("brightness"); },
                        [](const DistractorShift&) { return std::string("distractors"); },
                        [](const TextureShift&) { return std::string("texture"); },
                    },
                    shift);
}

ShiftSpec parse_shift(const std::string& name) {
  if (name == "none") return NoShift{};
  if (name == "spatial") return SpatialShift{};
  if (name == "brightness") return BrightnessShift{};
  if (name == "distractors") return DistractorShift{};
  if (name == "texture") return TextureShift{};
  throw Error("unknown shift '" + name + "'");
}

void validate_shift(const ShiftSpec& shift) {
  if (const auto* b = std::get_if<BrightnessShift>(&shift)) {
    if (!std::isfinite(b->offset) || b->offset < -kBaseBrightness || b->offset > 1.0 - kBaseBrightness) {
      throw Error("brightness offset must keep the base level within [0, 1]");
    }
  }
  if (const auto* d = std::get_if<DistractorShift>(&shift)) class_intensity(d->label);
  if (const auto* t = std::get_if<TextureShift>(&shift)) {
    if (t->pattern < 0) throw Error("texture pattern id must be >= 0");
  }
}

World::World(TaskSpec task, ShiftSpec shift, WorldConfig config)
    : task_(std::move(task)), shift_(std::move(shift)), config_(config) {
  task_.validate();
  validate_shift(shift_);
}

std::pair<Scene, Observation> World::reset(std::uint64_t seed) const {
  Rng rng(mix_seed(seed, 0x5ce9e));
  Scene scene;
  const bool spatial = std::holds_alternative<SpatialShift>(shift_);
  const bool shifted = !std::holds_alternative<NoShift>(shift_);

  scene.gripper = spatial ? Vec2{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)} : Vec2{0.5, 0.5};
  const double lo = spatial ? 0.08 : 0.15;
  const double hi = spatial ? 0.92 : 0.85;

  auto place = [&](SceneObject obj) {
    for (std::size_t attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const Vec2 p{rng.uniform(lo, hi), rng.uniform(lo, hi)};
      if (distance(p, scene.gripper) < 0.12) continue;
      bool clear = true;
      for (const auto& other : scene.objects) {
        clear = clear && distance(p, other.position) >= obj.radius + other.radius + 0.05;
      }
      for (const auto& other : scene.spurious.distractors) {
        clear = clear && distance(p, other.position) >= obj.radius + other.radius + 0.05;
      }
      if (!clear) continue;
      obj.position = p;
      return obj;
    }
    throw Error("could not place '" + obj.label + "' after 1000 attempts");
  };

  for (const auto& label : scene_labels(task_)) {
    SceneObject obj;
    obj.label = label;
    obj.intensity = class_intensity(label);
    obj.graspable = label != "zone";
    obj.radius = obj.graspable ? kBlockRadius : kZoneRadius;
    scene.objects.push_back(place(obj));
  }
  if (const auto* d = std::get_if<DistractorShift>(&shift_)) {
    for (std::size_t i = 0; i < d->count; ++i) {
      SceneObject obj{d->label, {}, kDistractorRadius, class_intensity(d->label), false};
      scene.spurious.distractors.push_back(place(obj));
    }
  }

  if (shifted) {
    scene.spurious.light = {rng.uniform(0.06, 0.94), rng.uniform(0.06, 0.94)};
  } else {
    // Training distribution: the light sits on the task subject.
    const Vec2 anchor = scene.find(task_.subject())->position;
    Vec2 offset;
    do {
      offset = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    } while (offset.norm() > 1.0);
    scene.spurious.light = anchor + config_.colocation_radius * offset;
  }
  scene.spurious.brightness = kBaseBrightness;
  if (const auto* b = std::get_if<BrightnessShift>(&shift_)) scene.spurious.brightness += b->offset;
  if (const auto* t = std::get_if<TextureShift>(&shift_)) scene.spurious.texture = t->pattern;

  Observation obs = render(scene);
  return {std::move(scene), std::move(obs)};
}

Vec2 World::goal_position(const Scene& scene) const {
  if (const auto* p = std::get_if<Vec2>(&task_.goal)) return *p;
  const auto& label = std::get<std::string>(task_.goal);
  const SceneObject* obj = scene.find(label);
  if (obj == nullptr) throw Error("goal object '" + label + "' missing from scene");
  return obj->position;
}

bool World::success(const Scene& scene) const {
  const SceneObject* subject = scene.find(task_.subject());
  if (subject == nullptr) return false;
  if (task_.kind == TaskKind::kReach) {
    return distance(scene.gripper, subject->position) <= task_.success_radius;
  }
  const bool held = scene.held_object && *scene.held_object == subject->label;
  return !held && distance(subject->position, goal_position(scene)) <= task_.success_radius;
}

std::pair<Scene, StepResult> World::step(const Scene& scene, std::span<const double> action) const {
  if (scene.terminated) throw Error("step called on a terminated episode");
  if (action.size() != kActionDims) throw Error("action must have 3 components");
  for (double a : action) {
    if (!std::isfinite(a)) throw Error("action contains non-finite values");
  }
  Scene next = scene;
  const double dx = std::clamp(action[0], -config_.step_max, config_.step_max);
  const double dy = std::clamp(action[1], -config_.step_max, config_.step_max);
  next.gripper = {std::clamp(scene.gripper.x + dx, 0.0, 1.0),
                  std::clamp(scene.gripper.y + dy, 0.0, 1.0)};

  const double grip = action[2];
  if (grip <= -kGripThreshold) {
    next.gripper_closed = false;
    next.held_object.reset();
  } else if (grip >= kGripThreshold && !scene.gripper_closed) {
    next.gripper_closed = true;
    SceneObject* nearest = nullptr;
    double best = config_.grasp_radius;
    for (auto& obj : next.objects) {
      const double d = distance(obj.position, next.gripper);
      if (obj.graspable && d <= best) {
        best = d;
        nearest = &obj;
      }
    }
    if (nearest != nullptr) next.held_object = nearest->label;
  }
  if (next.held_object) next.find(*next.held_object)->position = next.gripper;

  next.step = scene.step + 1;
  StepResult result;
  result.success_now = success(next);
  result.step = next.step;
  result.terminated = (result.success_now && config_.terminate_on_success) ||
                      next.step >= task_.max_steps;
  next.terminated = result.terminated;
  result.observation = render(next);
  return {std::move(next), std::move(result)};
}

Observation World::render(const Scene& scene) const { return pcd::render(scene, config_); }

Observation render(const Scene& scene, const WorldConfig& config) {
  Observation obs(config.width, config.height, scene.step);
  const double inv_two_sigma_sq = 1.0 / (2.0 * config.light_sigma * config.light_sigma);
  for (std::size_t y = 0; y < config.height; ++y) {
    for (std::size_t x = 0; x < config.width; ++x) {
      const Vec2 c = obs.cell_center(x, y);
      double object_value = 0.0;
      for (const auto& obj : scene.objects) {
        if (in_disk(c, obj)) object_value = std::max(object_value, obj.intensity);
      }
      for (const auto& obj : scene.spurious.distractors) {
        if (in_disk(c, obj)) object_value = std::max(object_value, obj.intensity);
      }
      const double d2 = (c.x - scene.spurious.light.x) * (c.x - scene.spurious.light.x) +
                        (c.y - scene.spurious.light.y) * (c.y - scene.spurious.light.y);
      const double light = scene.spurious.brightness +
                           scene.spurious.light_intensity * std::exp(-d2 * inv_two_sigma_sq);
      obs.at(kObjectPlane, x, y) = std::clamp(object_value, 0.0, 1.0);
      obs.at(kLightPlane, x, y) = std::clamp(light, 0.0, 1.0);
      obs.at(kTexturePlane, x, y) = texture_value(scene.spurious.texture, x, y);
    }
  }
  obs.proprio = {scene.gripper, scene.gripper_closed};
  return obs;
}

ObjectMask ground_truth_mask(const Scene& scene, const std::string& label,
                             const WorldConfig& config) {
  std::vector<const SceneObject*> matches;
  for (const auto& obj : scene.objects) {
    if (obj.label == label) matches.push_back(&obj);
  }
  for (const auto& obj : scene.spurious.distractors) {
    if (obj.label == label) matches.push_back(&obj);
  }
  if (matches.empty()) throw Error("ground_truth_mask: label '" + label + "' not in scene");
  ObjectMask mask(config.width, config.height, label);
  const Observation grid(config.width, config.height);
  for (std::size_t y = 0; y < config.height; ++y) {
    for (std::size_t x = 0; x < config.width; ++x) {
      const Vec2 c = grid.cell_center(x, y);
      for (const auto* obj : matches) {
        if (in_disk(c, *obj)) mask.set(x, y);
      }
    }
  }
  return mask;
}

}  // namespace pcd

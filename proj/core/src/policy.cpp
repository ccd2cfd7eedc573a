#include "pcd/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "pcd/error.hpp"

namespace pcd {
namespace {

constexpr double kClassTolerance = 0.02;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

constexpr double kHeldTolerance = 0.055;

std::string spaced(std::string label) {
  std::replace(label.begin(), label.end(), '_', ' ');
  return label;
}

// Desired normalized action for a controller that believes `subject` is the
// object of interest. A missing goal only matters once the object is held.
std::optional<std::vector<double>> desired_action(const Skill& skill, Vec2 gripper, bool closed,
                                                  Vec2 subject, std::optional<Vec2> goal,
                                                  bool holding, const ActionLimits& limits) {
  ControllerState state;
  state.gripper = gripper;
  state.gripper_closed = closed;
  state.subject = subject;
  state.holding = holding;
  if (skill.kind != TaskKind::kReach) {
    if (holding && !goal) return std::nullopt;
    // An unseen goal is treated as unreached.
    state.goal = goal.value_or(Vec2{std::numeric_limits<double>::max(), 0.0});
  }
  // Reaching aims inside half the success radius: centroids read off a 32x32
  // raster are only accurate to about a third of a cell. Placing already
  // releases at half the radius.
  const double radius =
      skill.kind == TaskKind::kReach ? 0.5 * skill.success_radius : skill.success_radius;
  const ControllerLimits ctl{limits.step_max, limits.grasp_radius, radius};
  const ControlOutput out = subgoal_control(skill.kind, state, ctl);
  GripCommand grip = out.grip;
  if (grip == GripCommand::kHold) grip = closed ? GripCommand::kClose : GripCommand::kOpen;
  return std::vector<double>{out.displacement.x / limits.step_max,
                             out.displacement.y / limits.step_max, grip_value(grip)};
}

}  // namespace

Skill parse_skill(const Instruction& instr) {
  instr.validate();
  const std::string text = lowercase(instr.text);
  Skill skill;
  if (text.find("reach") != std::string::npos) {
    skill.kind = TaskKind::kReach;
  } else if (text.find("stack") != std::string::npos) {
    skill.kind = TaskKind::kStack;
  } else if (text.find("near") != std::string::npos) {
    skill.kind = TaskKind::kMoveNear;
  } else if (text.find("put") != std::string::npos || text.find("place") != std::string::npos) {
    skill.kind = TaskKind::kPickPlace;
  } else {
    throw Error("cannot infer a skill from instruction '" + instr.text + "'");
  }
  skill.subject = instr.target_labels.front();
  skill.success_radius = make_task(skill.kind).success_radius;
  if (skill.kind == TaskKind::kReach) return skill;

  if (instr.target_labels.size() > 1) {
    skill.goal_label = instr.target_labels[1];
    return skill;
  }
  std::size_t best_pos = 0;
  for (const auto& label : palette_labels()) {
    if (label == skill.subject) continue;
    const auto pos = text.rfind(spaced(label));
    if (pos != std::string::npos && (!skill.goal_label || pos > best_pos)) {
      skill.goal_label = label;
      best_pos = pos;
    }
  }
  if (!skill.goal_label) throw Error("instruction '" + instr.text + "' names no goal");
  return skill;
}

std::optional<Vec2> locate_class(const Observation& obs, const std::string& label) {
  const double target = class_intensity(label);
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 0; y < obs.height(); ++y) {
    for (std::size_t x = 0; x < obs.width(); ++x) {
      if (std::abs(obs.at(kObjectPlane, x, y) - target) > kClassTolerance) continue;
      const Vec2 c = obs.cell_center(x, y);
      sx += c.x;
      sy += c.y;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return Vec2{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

std::optional<Vec2> locate_light(const Observation& obs) {
  std::size_t best_x = 0;
  std::size_t best_y = 0;
  double best = -1.0;
  double lowest = std::numeric_limits<double>::max();
  for (std::size_t y = 0; y < obs.height(); ++y) {
    for (std::size_t x = 0; x < obs.width(); ++x) {
      const double v = obs.at(kLightPlane, x, y);
      lowest = std::min(lowest, v);
      if (v > best) {
        best = v;
        best_x = x;
        best_y = y;
      }
    }
  }
  if (best - lowest < 1e-6) return std::nullopt;
  double sw = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t y = best_y > 0 ? best_y - 1 : 0; y <= std::min(best_y + 1, obs.height() - 1); ++y) {
    for (std::size_t x = best_x > 0 ? best_x - 1 : 0; x <= std::min(best_x + 1, obs.width() - 1); ++x) {
      const double w = obs.at(kLightPlane, x, y) - lowest;
      const Vec2 c = obs.cell_center(x, y);
      sw += w;
      sx += w * c.x;
      sy += w * c.y;
    }
  }
  return Vec2{sx / sw, sy / sw};
}

Percept perceive(const Observation& obs, const Skill& skill) {
  Percept percept;
  percept.gripper = obs.proprio.gripper;
  percept.gripper_closed = obs.proprio.gripper_closed;
  percept.subject = locate_class(obs, skill.subject);
  if (skill.goal_label) percept.goal = locate_class(obs, *skill.goal_label);
  percept.light = locate_light(obs);
  return percept;
}

void SpuriousMixtureParams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
  if (!(sharpness > 0.0) || !std::isfinite(sharpness)) throw Error("sharpness must be finite and > 0");
  if (action_bins < 2) throw Error("action_bins must be >= 2");
}

BranchTargets branch_targets(const Observation& obs, const Instruction& instr,
                             const ActionLimits& limits) {
  const Skill skill = parse_skill(instr);
  const Percept percept = perceive(obs, skill);
  BranchTargets targets;
  if (percept.subject) {
    // A held block sits under the goal it is dropped on, so only the visible
    // part of it is seen; any such part lies within a block radius.
    const bool holding = percept.gripper_closed &&
                         distance(*percept.subject, percept.gripper) <= kHeldTolerance;
    targets.object = desired_action(skill, percept.gripper, percept.gripper_closed,
                                    *percept.subject, percept.goal, holding, limits);
  } else if (percept.gripper_closed && skill.kind != TaskKind::kReach) {
    // Closed on something that is no longer visible: assume it is in hand.
    targets.object = desired_action(skill, percept.gripper, true, percept.gripper,
                                    percept.goal, true, limits);
  }
  if (percept.light) {
    // The light branch equates a closed gripper with carrying the object.
    targets.spurious = desired_action(skill, percept.gripper, percept.gripper_closed,
                                      *percept.light, percept.goal, percept.gripper_closed,
                                      limits);
  }
  return targets;
}

std::vector<BinGrid> default_alphabets(double step_max, std::size_t bins) {
  return {BinGrid(-step_max, step_max, bins), BinGrid(-step_max, step_max, bins),
          BinGrid(-1.0, 1.0, 2)};
}

SpuriousMixturePolicy::SpuriousMixturePolicy(SpuriousMixtureParams params, ActionLimits limits)
    : params_(params), limits_(limits),
      alphabets_(default_alphabets(limits.step_max, params.action_bins)) {
  params_.validate();
}

std::vector<CategoricalDist> SpuriousMixturePolicy::branch(
    const std::optional<std::vector<double>>& target) const {
  std::vector<CategoricalDist> out;
  out.reserve(alphabets_.size());
  for (std::size_t t = 0; t < alphabets_.size(); ++t) {
    const BinGrid& grid = alphabets_[t];
    if (!target) {
      out.push_back(CategoricalDist::uniform(grid));
      continue;
    }
    const double scale = t < 2 ? limits_.step_max : 1.0;
    std::vector<double> w(grid.count());
    for (std::size_t k = 0; k < grid.count(); ++k) {
      const double u = grid.center(k) / scale - (*target)[t];
      w[k] = std::exp(-params_.sharpness * u * u);
    }
    out.push_back(CategoricalDist::from_weights(grid, std::move(w)));
  }
  return out;
}

CategoricalDist SpuriousMixturePolicy::predict(const Observation& obs, const Instruction& instr,
                                               const PrefixContext& prefix) const {
  const std::size_t t = prefix.committed.size();
  if (t >= action_dims()) throw Error("prefix already covers every action dimension");
  for (std::size_t s = 0; s < t; ++s) {
    if (prefix.committed[s] >= alphabets_[s].count()) throw Error("prefix index out of range");
  }
  const BranchTargets targets = branch_targets(obs, instr, limits_);
  const auto object = branch(targets.object);
  const auto spurious = branch(targets.spurious);

  // Posterior component weights given the committed prefix.
  double w_object = 1.0 - params_.lambda;
  double w_spurious = params_.lambda;
  for (std::size_t s = 0; s < t; ++s) {
    w_object *= object[s][prefix.committed[s]];
    w_spurious *= spurious[s][prefix.committed[s]];
  }
  if (!(w_object + w_spurious > 0.0)) {
    w_object = 1.0 - params_.lambda;
    w_spurious = params_.lambda;
  }
  const double total = w_object + w_spurious;
  std::vector<double> probs(alphabets_[t].count());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    probs[k] = (w_object * object[t][k] + w_spurious * spurious[t][k]) / total;
  }
  return CategoricalDist::from_weights(alphabets_[t], std::move(probs));
}

}  // namespace pcd

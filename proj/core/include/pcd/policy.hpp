#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pcd/action_dist.hpp"
#include "pcd/expert.hpp"
#include "pcd/instruction.hpp"
#include "pcd/kde.hpp"
#include "pcd/raster.hpp"
#include "pcd/rng.hpp"
#include "pcd/simworld.hpp"

namespace pcd {

// Bin indices already decoded for dimensions 0 .. t-1.
struct PrefixContext {
  std::vector<std::size_t> committed;
};

// Policy that emits a categorical distribution per action dimension,
// decoded one dimension at a time.
class DistributionPolicy {
 public:
  virtual ~DistributionPolicy() = default;

  virtual std::size_t action_dims() const = 0;
  virtual const BinGrid& alphabet(std::size_t dim) const = 0;
  // Distribution of dimension prefix.committed.size().
  virtual CategoricalDist predict(const Observation& obs, const Instruction& instr,
                                  const PrefixContext& prefix) const = 0;
};

// Policy that only emits sampled actions.
class SamplerPolicy {
 public:
  virtual ~SamplerPolicy() = default;

  virtual std::size_t action_dims() const = 0;
  virtual SampleMatrix sample(const Observation& obs, const Instruction& instr, std::size_t n,
                              Rng& rng) const = 0;
};

// Skill implied by an instruction: which task, which object, which goal.
struct Skill {
  TaskKind kind = TaskKind::kReach;
  std::string subject;
  std::optional<std::string> goal_label;
  double success_radius = 0.05;
};

Skill parse_skill(const Instruction& instr);

// Scene quantities a policy can read off an observation.
struct Percept {
  Vec2 gripper;
  bool gripper_closed = false;
  std::optional<Vec2> subject;
  std::optional<Vec2> goal;
  std::optional<Vec2> light;
};

// Centroid of plane-0 cells whose intensity matches the label's class.
std::optional<Vec2> locate_class(const Observation& obs, const std::string& label);
// Brightest plane-1 location, refined by a 3x3 weighted centroid above the
// plane median; empty when the plane is flat.
std::optional<Vec2> locate_light(const Observation& obs);
Percept perceive(const Observation& obs, const Skill& skill);

struct SpuriousMixtureParams {
  double lambda = 0.6;      // weight of the light-following branch
  double sharpness = 20.0;  // concentration of each branch around its target
  std::size_t action_bins = 21;

  void validate() const;
};

struct ActionLimits {
  double step_max = 0.05;
  double grasp_radius = 0.04;
};

// Desired normalized action of each branch; empty when the branch has no
// information in the observation. Components are (dx/step_max, dy/step_max, grip).
struct BranchTargets {
  std::optional<std::vector<double>> object;
  std::optional<std::vector<double>> spurious;
};

BranchTargets branch_targets(const Observation& obs, const Instruction& instr,
                             const ActionLimits& limits);

// Autoregressive mock policy: a two-component mixture over joint actions,
// (1 - lambda) * object branch + lambda * light branch, each a product of
// discretized Gaussians. An uninformed branch is uniform.
class SpuriousMixturePolicy : public DistributionPolicy {
 public:
  explicit SpuriousMixturePolicy(SpuriousMixtureParams params, ActionLimits limits = {});

  std::size_t action_dims() const override { return kActionDims; }
  const BinGrid& alphabet(std::size_t dim) const override { return alphabets_.at(dim); }
  CategoricalDist predict(const Observation& obs, const Instruction& instr,
                          const PrefixContext& prefix) const override;

  // Per-dimension marginals of one branch (empty target -> uniform).
  std::vector<CategoricalDist> branch(const std::optional<std::vector<double>>& target) const;

  const SpuriousMixtureParams& params() const { return params_; }

 private:
  SpuriousMixtureParams params_;
  ActionLimits limits_;
  std::vector<BinGrid> alphabets_;
};

// Default per-dimension action alphabets: (dx, dy) over [-step, step] with
// `bins` cells and a two-cell gripper alphabet over [-1, 1].
std::vector<BinGrid> default_alphabets(double step_max, std::size_t bins);

}  // namespace pcd

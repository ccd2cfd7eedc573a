#include "pcd/mi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pcd/error.hpp"

namespace pcd {
namespace {

double entropy_of_counts(const std::vector<std::size_t>& counts, std::size_t n) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

std::vector<std::size_t> counts_of(std::span<const std::uint64_t> x) {
  std::unordered_map<std::uint64_t, std::size_t> m;
  for (auto v : x) ++m[v];
  std::vector<std::size_t> out;
  out.reserve(m.size());
  for (const auto& [_, c] : m) out.push_back(c);
  return out;
}

}  // namespace

double plugin_entropy(std::span<const std::uint64_t> x) {
  if (x.empty()) return 0.0;
  return entropy_of_counts(counts_of(x), x.size());
}

double plugin_mutual_information(std::span<const std::uint64_t> x,
                                 std::span<const std::uint64_t> y) {
  if (x.size() != y.size()) throw Error("mutual information needs paired samples");
  if (x.empty()) return 0.0;
  const std::size_t n = x.size();
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> joint;
  for (std::size_t i = 0; i < n; ++i) ++joint[{x[i], y[i]}];
  std::vector<std::size_t> joint_counts;
  joint_counts.reserve(joint.size());
  for (const auto& [_, c] : joint) joint_counts.push_back(c);
  const double hx = plugin_entropy(x);
  const double hy = plugin_entropy(y);
  const double mi = hx + hy - entropy_of_counts(joint_counts, n);
  // Clamp rounding noise back into [0, min(H(x), H(y))].
  return std::clamp(mi, 0.0, std::min(hx, hy));
}

std::uint64_t quadrant(Vec2 offset) {
  return (offset.x >= 0.0 ? 1u : 0u) | (offset.y >= 0.0 ? 2u : 0u);
}

MIReport estimate_mi(const PolicySpec& policy_spec, const TaskSpec& task, const ShiftSpec& shift,
                     std::size_t n_rollouts, std::uint64_t seed, const KdeConfig& kde,
                     const WorldConfig& world_cfg) {
  if (n_rollouts < 100) throw Error("estimate_mi needs at least 100 rollouts");
  const World world(task, shift, world_cfg);
  const Policy policy = Policy::make(policy_spec, world_cfg);
  EpisodeOptions opts;
  opts.decode.selection = Selection::kGreedy;
  opts.kde = kde;
  const auto grids = default_alphabets(world_cfg.step_max, policy_spec.mixture.action_bins);

  std::vector<std::uint64_t> actions;
  std::vector<std::uint64_t> spurious;
  std::vector<std::uint64_t> target;
  const StepObserver observer = [&](const Scene& scene, std::span<const double> action) {
    std::uint64_t key = 0;
    for (std::size_t d = 0; d < grids.size(); ++d) {
      key = key * grids[d].count() + grids[d].index_of(action[d]);
    }
    const SceneObject* subject = scene.find(task.subject());
    actions.push_back(key);
    spurious.push_back(quadrant(scene.spurious.light - subject->position));
    target.push_back(quadrant(subject->position - scene.gripper));
  };
  for (std::size_t i = 0; i < n_rollouts; ++i) {
    run_baseline_episode(policy, world, opts, seed + i, observer);
  }

  MIReport report;
  report.samples = actions.size();
  report.mi_action_vs_spurious = plugin_mutual_information(actions, spurious);
  report.mi_action_vs_target = plugin_mutual_information(actions, target);
  report.entropy_action = plugin_entropy(actions);
  report.entropy_spurious = plugin_entropy(spurious);
  report.entropy_target = plugin_entropy(target);
  return report;
}

}  // namespace pcd

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcd/action_dist.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/kde.hpp"
#include "pcd/policy.hpp"
#include "pcd/simworld.hpp"
#include "pcd/track2mask.hpp"

namespace pcd {

enum class PolicyKind { kAutoregressive, kDiffusion, kExpert };

const char* to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::kDiffusion;
  SpuriousMixtureParams mixture;
  std::size_t diffusion_steps = 100;

  void validate() const;
};

enum class PromptKind { kPoint, kBox, kDetector };

const char* to_string(PromptKind kind);
PromptKind parse_prompt_kind(const std::string& name);

struct MaskConfig {
  PromptKind prompt = PromptKind::kDetector;
  TrackerMode tracker = TrackerMode::kExact;
  InpaintStrategy inpaint = BackgroundMeanFill{};
  double miss_prob = 0.0;  // detector only
  std::size_t jitter = 0;  // detector only

  void validate() const;
};

std::string inpaint_name(const InpaintStrategy& strategy);
InpaintStrategy parse_inpaint(const std::string& name);

enum class Method { kBaseline, kPcd };

const char* to_string(Method method);
Method parse_method(const std::string& name);

// Everything needed to run one batch.
struct PcdRunConfig {
  DecodeConfig decode;
  KdeConfig kde;
  MaskConfig mask;
  TaskSpec task = make_task(TaskKind::kReach);
  ShiftSpec shift = NoShift{};
  PolicySpec policy;
  Method method = Method::kPcd;
  std::size_t trials = 100;
  std::uint64_t base_seed = 0;
  // Continue past success so the max-step metric is evaluated too.
  bool both_metrics = false;
  // Worker threads for a batch; 0 picks the hardware concurrency.
  std::size_t threads = 1;

  void validate() const;
};

// A constructed policy of one of the three kinds. Immutable and safe to
// share across threads.
class Policy {
 public:
  static Policy make(const PolicySpec& spec, const WorldConfig& world = {});

  PolicyKind kind() const { return kind_; }
  const DistributionPolicy* distribution() const { return distribution_.get(); }
  const SamplerPolicy* sampler() const { return sampler_.get(); }

 private:
  PolicyKind kind_ = PolicyKind::kExpert;
  std::shared_ptr<const DistributionPolicy> distribution_;
  std::shared_ptr<const SamplerPolicy> sampler_;
};

// Track2Mask state of one episode: annotates every instruction target on
// the first call and tracks afterwards. The union of target masks is returned.
class Masker {
 public:
  Masker(MaskConfig config, std::vector<std::string> labels, WorldConfig world, Rng rng);

  ObjectMask update(const Scene& scene, const Observation& obs);
  Observation apply(const Observation& obs, const ObjectMask& mask) const;

  const std::vector<TrackerState>& trackers() const { return trackers_; }

 private:
  MaskConfig config_;
  std::vector<std::string> labels_;
  WorldConfig world_;
  Rng rng_;
  std::vector<TrackerState> trackers_;
  bool started_ = false;
};

// Prompt a user would give for `label` in the initial scene.
AnnotationPrompt make_prompt(const MaskConfig& config, const Scene& scene, const std::string& label,
                             const WorldConfig& world);

struct StepRecord {
  std::size_t step = 0;
  std::vector<double> action;
  bool success_now = false;
  std::size_t mask_cells = 0;
  double duration_ms = 0.0;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  bool success_completion = false;
  bool success_maxstep = false;
  std::size_t total_steps = 0;
  double duration_ms = 0.0;
  std::string error;  // non-empty when a component error ended the episode

  // Same seed, actions, flags and outcomes; timings are ignored.
  bool same_trajectory(const EpisodeRecord& other) const;
};

// Decoding options shared by both methods.
struct EpisodeOptions {
  DecodeConfig decode;
  KdeConfig kde;
  MaskConfig mask;
};

// Called after each executed action with the pre-step scene.
using StepObserver = std::function<void(const Scene& scene, std::span<const double> action)>;

EpisodeRecord run_pcd_episode(const Policy& policy, const World& world, const EpisodeOptions& opts,
                              std::uint64_t seed, const StepObserver& observer = {});
EpisodeRecord run_baseline_episode(const Policy& policy, const World& world,
                                   const EpisodeOptions& opts, std::uint64_t seed,
                                   const StepObserver& observer = {});

struct BatchResult {
  std::string task;
  std::string shift;
  std::string method;
  double alpha = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::size_t n_trials = 0;
  std::size_t successes_completion = 0;
  std::size_t successes_maxstep = 0;
  double rate_completion = 0.0;
  double rate_maxstep = 0.0;
  double mean_ms = 0.0;
  std::uint64_t config_hash = 0;

  // Equal outcomes; mean_ms is wall-clock and excluded.
  bool same_outcome(const BatchResult& other) const;
  bool operator==(const BatchResult&) const = default;
};

struct BatchRun {
  BatchResult result;
  std::vector<EpisodeRecord> episodes;  // indexed by trial
};

BatchRun run_batch(const PcdRunConfig& cfg);
BatchResult evaluate_batch(const PcdRunConfig& cfg);

// One PCD batch per alpha on shared seeds.
std::vector<std::pair<double, BatchResult>> sweep_alpha(const PcdRunConfig& cfg,
                                                        const std::vector<double>& alphas);

enum class SweepAxis { kAnnotation, kInpaint, kBandwidth, kSamples, kShift };

const char* to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

// Applies one axis value ("detector", "detector:miss=0.2", "mean", "scott",
// "0.01", "24", "brightness", ...) to a copy of cfg.
PcdRunConfig apply_axis_value(const PcdRunConfig& cfg, SweepAxis axis, const std::string& value);

struct SweepRow {
  std::string value;
  BatchResult result;
};

std::vector<SweepRow> sweep_axis(const PcdRunConfig& cfg, SweepAxis axis,
                                 const std::vector<std::string>& values);

struct BootstrapResult {
  double mean_difference = 0.0;  // treatment minus control
  double p_value = 1.0;          // one-sided, H0: difference <= 0
};

// Paired bootstrap over per-trial success indicators.
BootstrapResult paired_bootstrap(const std::vector<bool>& control, const std::vector<bool>& treatment,
                                 std::size_t resamples, std::uint64_t seed);

std::vector<bool> completion_outcomes(const BatchRun& run);

}  // namespace pcd

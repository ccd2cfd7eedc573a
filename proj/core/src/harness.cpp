#include "pcd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <charconv>
#include <thread>

#include "pcd/config.hpp"
#include "pcd/error.hpp"
#include "pcd/expert.hpp"

namespace pcd {
namespace {

// Independent random streams of one episode. Keeping the masked branch and
// the annotation on their own streams is what makes alpha = 0 reproduce the
// baseline draw for draw.
constexpr std::uint64_t kPolicyStream = 0x9011c7;
constexpr std::uint64_t kMaskedStream = 0x3a5ced;
constexpr std::uint64_t kAnnotationStream = 0xa4407a7e;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

double parse_number(const std::string& text, const char* what) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error(std::string("invalid ") + what + " '" + text + "'");
  return value;
}

std::size_t parse_count(const std::string& text, const char* what) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error(std::string("invalid ") + what + " '" + text + "'");
  return value;
}

std::vector<double> decode_autoregressive(const DistributionPolicy& policy, const Observation& obs,
                                          const Observation* masked, const Instruction& instr,
                                          const DecodeConfig& decode, Rng& rng) {
  PrefixContext prefix;
  std::vector<double> action;
  action.reserve(policy.action_dims());
  for (std::size_t t = 0; t < policy.action_dims(); ++t) {
    CategoricalDist p = policy.predict(obs, instr, prefix);
    if (masked != nullptr) {
      // Both branches condition on the same contrast-decoded prefix.
      p = contrastive_combine(p, policy.predict(*masked, instr, prefix), decode);
    }
    const std::size_t k = select_bin(p, decode.selection, rng);
    prefix.committed.push_back(k);
    action.push_back(p.grid().center(k));
  }
  return action;
}

std::vector<double> decode_sampler(const SamplerPolicy& policy, const Observation& obs,
                                   const Observation* masked, const Instruction& instr,
                                   const EpisodeOptions& opts, Rng& rng, Rng& masked_rng) {
  const SampleMatrix samples = policy.sample(obs, instr, opts.kde.n_samples, rng);
  if (masked == nullptr || opts.decode.alpha == 0.0) {
    // With alpha = 0 the masked estimate cannot change the result, and
    // skipping it keeps the grid identical to the baseline's.
    return select_action(kde_estimate_single(samples, opts.kde), opts.decode, rng);
  }
  const SampleMatrix masked_samples = policy.sample(*masked, instr, opts.kde.n_samples, masked_rng);
  const auto [p, q] = kde_estimate_multi(samples, opts.kde, masked_samples);
  return select_action(contrastive_combine_multi(p, q, opts.decode), opts.decode, rng);
}

EpisodeRecord run_episode(const Policy& policy, const World& world, const EpisodeOptions& opts,
                          std::uint64_t seed, bool contrast, const StepObserver& observer) {
  EpisodeRecord record;
  record.seed = seed;
  const auto start = Clock::now();
  try {
    opts.decode.validate();
    opts.kde.validate();
    auto [scene, obs] = world.reset(seed);
    Rng rng(mix_seed(seed, kPolicyStream));
    Rng masked_rng(mix_seed(seed, kMaskedStream));
    const Instruction& instr = world.task().instruction;
    const ScriptedExpert expert(world);

    std::optional<Masker> masker;
    if (contrast && policy.kind() != PolicyKind::kExpert) {
      opts.mask.validate();
      masker.emplace(opts.mask, instr.target_labels, world.config(),
                     Rng(mix_seed(seed, kAnnotationStream)));
    }

    while (!scene.terminated) {
      const auto step_start = Clock::now();
      StepRecord step;
      step.step = scene.step;
      std::optional<Observation> masked;
      if (masker) {
        const ObjectMask mask = masker->update(scene, obs);
        step.mask_cells = mask.count();
        masked = masker->apply(obs, mask);
      }
      const Observation* masked_ptr = masked ? &*masked : nullptr;
      switch (policy.kind()) {
        case PolicyKind::kAutoregressive:
          step.action = decode_autoregressive(*policy.distribution(), obs, masked_ptr, instr,
                                              opts.decode, rng);
          break;
        case PolicyKind::kDiffusion:
          step.action =
              decode_sampler(*policy.sampler(), obs, masked_ptr, instr, opts, rng, masked_rng);
          break;
        case PolicyKind::kExpert:
          step.action = expert.act(scene);
          break;
      }
      if (observer) observer(scene, step.action);
      auto [next, result] = world.step(scene, step.action);
      step.success_now = result.success_now;
      step.duration_ms = elapsed_ms(step_start);
      record.success_completion = record.success_completion || result.success_now;
      record.steps.push_back(std::move(step));
      scene = std::move(next);
      obs = std::move(result.observation);
    }
    record.success_maxstep = !record.steps.empty() && record.steps.back().success_now;
  } catch (const std::exception& e) {
    record.error = e.what();
    record.success_completion = false;
    record.success_maxstep = false;
  }
  record.total_steps = record.steps.size();
  record.duration_ms = elapsed_ms(start);
  return record;
}

}  // namespace

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kAutoregressive: return "autoregressive";
    case PolicyKind::kDiffusion: return "diffusion";
    case PolicyKind::kExpert: return "expert";
  }
  return "?";
}

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "autoregressive" || name == "ar") return PolicyKind::kAutoregressive;
  if (name == "diffusion") return PolicyKind::kDiffusion;
  if (name == "expert") return PolicyKind::kExpert;
  throw Error("unknown policy kind '" + name + "'");
}

void PolicySpec::validate() const {
  mixture.validate();
  if (kind == PolicyKind::kDiffusion && diffusion_steps < 1) {
    throw Error("diffusion_steps must be >= 1");
  }
}

const char* to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kPoint: return "point";
    case PromptKind::kBox: return "box";
    case PromptKind::kDetector: return "detector";
  }
  return "?";
}

PromptKind parse_prompt_kind(const std::string& name) {
  if (name == "point") return PromptKind::kPoint;
  if (name == "box") return PromptKind::kBox;
  if (name == "detector") return PromptKind::kDetector;
  throw Error("unknown prompt kind '" + name + "'");
}

void MaskConfig::validate() const {
  if (!(miss_prob >= 0.0 && miss_prob <= 1.0)) throw Error("miss_prob must lie in [0, 1]");
  validate_strategy(inpaint);
}

std::string inpaint_name(const InpaintStrategy& strategy) {
  if (std::holds_alternative<ConstantFill>(strategy)) return "constant";
  if (std::holds_alternative<BackgroundMeanFill>(strategy)) return "mean";
  return "diffusion";
}

InpaintStrategy parse_inpaint(const std::string& name) {
  if (name == "constant") return ConstantFill{};
  if (name == "mean") return BackgroundMeanFill{};
  if (name == "diffusion") return NeighborDiffusionFill{};
  throw Error("unknown inpaint strategy '" + name + "'");
}

const char* to_string(Method method) {
  return method == Method::kBaseline ? "baseline" : "pcd";
}

Method parse_method(const std::string& name) {
  if (name == "baseline") return Method::kBaseline;
  if (name == "pcd") return Method::kPcd;
  throw Error("unknown method '" + name + "'");
}

void PcdRunConfig::validate() const {
  decode.validate();
  kde.validate();
  mask.validate();
  task.validate();
  validate_shift(shift);
  policy.validate();
  if (trials < 1) throw Error("trials must be >= 1");
}

Policy Policy::make(const PolicySpec& spec, const WorldConfig& world) {
  spec.validate();
  Policy policy;
  policy.kind_ = spec.kind;
  const ActionLimits limits{world.step_max, world.grasp_radius};
  switch (spec.kind) {
    case PolicyKind::kAutoregressive:
      policy.distribution_ = std::make_shared<SpuriousMixturePolicy>(spec.mixture, limits);
      break;
    case PolicyKind::kDiffusion:
      policy.sampler_ = std::make_shared<MixtureDiffusionPolicy>(
          spec.mixture, cosine_schedule(spec.diffusion_steps), limits);
      break;
    case PolicyKind::kExpert:
      break;
  }
  return policy;
}

AnnotationPrompt make_prompt(const MaskConfig& config, const Scene& scene, const std::string& label,
                             const WorldConfig& world) {
  switch (config.prompt) {
    case PromptKind::kPoint: {
      const SceneObject* obj = scene.find(label);
      if (obj == nullptr) throw Error("cannot point at missing object '" + label + "'");
      auto cell = [](double v, std::size_t n) {
        return std::min(static_cast<std::size_t>(std::max(v, 0.0) * static_cast<double>(n)), n - 1);
      };
      return PointPrompt{cell(obj->position.x, world.width), cell(obj->position.y, world.height)};
    }
    case PromptKind::kBox: {
      const ObjectMask truth = ground_truth_mask(scene, label, world);
      if (truth.empty()) throw Error("cannot box invisible object '" + label + "'");
      BoxPrompt box{world.width, world.height, 0, 0};
      for (std::size_t y = 0; y < world.height; ++y) {
        for (std::size_t x = 0; x < world.width; ++x) {
          if (!truth.get(x, y)) continue;
          box.x0 = std::min(box.x0, x);
          box.y0 = std::min(box.y0, y);
          box.x1 = std::max(box.x1, x + 1);
          box.y1 = std::max(box.y1, y + 1);
        }
      }
      // A hand-drawn box leaves a one-cell margin.
      box.x0 = box.x0 > 0 ? box.x0 - 1 : 0;
      box.y0 = box.y0 > 0 ? box.y0 - 1 : 0;
      box.x1 = std::min(box.x1 + 1, world.width);
      box.y1 = std::min(box.y1 + 1, world.height);
      return box;
    }
    case PromptKind::kDetector:
      return DetectorPrompt{label, config.miss_prob, config.jitter};
  }
  throw Error("unknown prompt kind");
}

Masker::Masker(MaskConfig config, std::vector<std::string> labels, WorldConfig world, Rng rng)
    : config_(std::move(config)), labels_(std::move(labels)), world_(world), rng_(rng) {
  if (labels_.empty()) throw Error("masker needs at least one target label");
}

ObjectMask Masker::update(const Scene& scene, const Observation& obs) {
  const TruthProvider truth = [&](const std::string& label) {
    return ground_truth_mask(scene, label, world_);
  };
  ObjectMask all(obs.width(), obs.height(), "targets");
  if (!started_) {
    for (const auto& label : labels_) {
      auto [mask, state] = annotate_initial(obs, make_prompt(config_, scene, label, world_), label,
                                            config_.tracker, truth, rng_);
      all |= mask;
      trackers_.push_back(std::move(state));
    }
    started_ = true;
    return all;
  }
  for (auto& state : trackers_) all |= track(state, obs, truth);
  return all;
}

Observation Masker::apply(const Observation& obs, const ObjectMask& mask) const {
  return inpaint(obs, mask, config_.inpaint);
}

bool EpisodeRecord::same_trajectory(const EpisodeRecord& other) const {
  if (seed != other.seed || success_completion != other.success_completion ||
      success_maxstep != other.success_maxstep || total_steps != other.total_steps ||
      error != other.error || steps.size() != other.steps.size()) {
    return false;
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].step != other.steps[i].step || steps[i].action != other.steps[i].action ||
        steps[i].success_now != other.steps[i].success_now) {
      return false;
    }
  }
  return true;
}

EpisodeRecord run_pcd_episode(const Policy& policy, const World& world, const EpisodeOptions& opts,
                              std::uint64_t seed, const StepObserver& observer) {
  return run_episode(policy, world, opts, seed, true, observer);
}

EpisodeRecord run_baseline_episode(const Policy& policy, const World& world,
                                   const EpisodeOptions& opts, std::uint64_t seed,
                                   const StepObserver& observer) {
  return run_episode(policy, world, opts, seed, false, observer);
}

bool BatchResult::same_outcome(const BatchResult& other) const {
  return n_trials == other.n_trials && successes_completion == other.successes_completion &&
         successes_maxstep == other.successes_maxstep &&
         rate_completion == other.rate_completion && rate_maxstep == other.rate_maxstep;
}

BatchRun run_batch(const PcdRunConfig& cfg) {
  cfg.validate();
  WorldConfig world_cfg;
  world_cfg.terminate_on_success = !cfg.both_metrics;
  const World world(cfg.task, cfg.shift, world_cfg);
  const Policy policy = Policy::make(cfg.policy, world_cfg);
  const EpisodeOptions opts{cfg.decode, cfg.kde, cfg.mask};

  BatchRun run;
  run.episodes.resize(cfg.trials);
  auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = cfg.base_seed + i;
    run.episodes[i] = cfg.method == Method::kPcd ? run_pcd_episode(policy, world, opts, seed)
                                                 : run_baseline_episode(policy, world, opts, seed);
  };

  std::size_t threads = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
  threads = std::clamp<std::size_t>(threads, 1, cfg.trials);
  if (threads == 1) {
    for (std::size_t i = 0; i < cfg.trials; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < cfg.trials; i = next++) run_one(i);
      });
    }
  }

  BatchResult& r = run.result;
  r.task = to_string(cfg.task.kind);
  r.shift = shift_name(cfg.shift);
  r.method = to_string(cfg.method);
  r.alpha = cfg.method == Method::kPcd ? cfg.decode.alpha : 0.0;
  r.n_samples = cfg.kde.n_samples;
  r.seed = cfg.base_seed;
  r.n_trials = cfg.trials;
  double total_ms = 0.0;
  for (const auto& e : run.episodes) {
    if (e.success_completion) ++r.successes_completion;
    if (e.success_maxstep) ++r.successes_maxstep;
    total_ms += e.duration_ms;
  }
  r.rate_completion = static_cast<double>(r.successes_completion) / static_cast<double>(r.n_trials);
  r.rate_maxstep = static_cast<double>(r.successes_maxstep) / static_cast<double>(r.n_trials);
  r.mean_ms = total_ms / static_cast<double>(r.n_trials);
  r.config_hash = config_hash(cfg);
  return run;
}

BatchResult evaluate_batch(const PcdRunConfig& cfg) { return run_batch(cfg).result; }

std::vector<std::pair<double, BatchResult>> sweep_alpha(const PcdRunConfig& cfg,
                                                        const std::vector<double>& alphas) {
  std::vector<std::pair<double, BatchResult>> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    PcdRunConfig c = cfg;
    c.method = Method::kPcd;
    c.decode.alpha = alpha;
    out.emplace_back(alpha, evaluate_batch(c));
  }
  return out;
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAnnotation: return "annotation";
    case SweepAxis::kInpaint: return "inpaint";
    case SweepAxis::kBandwidth: return "bandwidth";
    case SweepAxis::kSamples: return "n";
    case SweepAxis::kShift: return "shift";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "annotation") return SweepAxis::kAnnotation;
  if (name == "inpaint") return SweepAxis::kInpaint;
  if (name == "bandwidth") return SweepAxis::kBandwidth;
  if (name == "n") return SweepAxis::kSamples;
  if (name == "shift") return SweepAxis::kShift;
  throw Error("unknown sweep axis '" + name + "'");
}

PcdRunConfig apply_axis_value(const PcdRunConfig& cfg, SweepAxis axis, const std::string& value) {
  PcdRunConfig c = cfg;
  switch (axis) {
    case SweepAxis::kAnnotation: {
      const auto colon = value.find(':');
      c.mask.prompt = parse_prompt_kind(value.substr(0, colon));
      c.mask.miss_prob = 0.0;
      c.mask.jitter = 0;
      if (colon == std::string::npos) break;
      if (c.mask.prompt != PromptKind::kDetector) {
        throw Error("only detector annotations take parameters: '" + value + "'");
      }
      const std::string param = value.substr(colon + 1);
      if (param.rfind("miss=", 0) == 0) {
        c.mask.miss_prob = parse_number(param.substr(5), "miss probability");
      } else if (param.rfind("jitter=", 0) == 0) {
        c.mask.jitter = parse_count(param.substr(7), "jitter");
      } else {
        throw Error("unknown annotation parameter '" + param + "'");
      }
      break;
    }
    case SweepAxis::kInpaint:
      c.mask.inpaint = parse_inpaint(value);
      break;
    case SweepAxis::kBandwidth:
      if (value == "scott") {
        c.kde.bandwidth = ScottBandwidth{};
      } else {
        const double b = parse_number(value, "bandwidth");
        if (!(b > 0.0)) throw Error("bandwidth must be > 0");
        c.kde.bandwidth = FixedBandwidth{b};
      }
      break;
    case SweepAxis::kSamples:
      c.kde.n_samples = parse_count(value, "sample count");
      break;
    case SweepAxis::kShift:
      c.shift = parse_shift(value);
      break;
  }
  c.validate();
  return c;
}

std::vector<SweepRow> sweep_axis(const PcdRunConfig& cfg, SweepAxis axis,
                                 const std::vector<std::string>& values) {
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (const auto& value : values) {
    rows.push_back({value, evaluate_batch(apply_axis_value(cfg, axis, value))});
  }
  return rows;
}

BootstrapResult paired_bootstrap(const std::vector<bool>& control, const std::vector<bool>& treatment,
                                 std::size_t resamples, std::uint64_t seed) {
  if (control.size() != treatment.size() || control.empty()) {
    throw Error("paired bootstrap needs two non-empty samples of equal length");
  }
  if (resamples < 1) throw Error("paired bootstrap needs at least one resample");
  const std::size_t n = control.size();
  std::vector<int> diff(n);
  long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = static_cast<int>(treatment[i]) - static_cast<int>(control[i]);
    total += diff[i];
  }
  BootstrapResult out;
  out.mean_difference = static_cast<double>(total) / static_cast<double>(n);
  Rng rng(seed);
  std::size_t not_better = 0;
  for (std::size_t b = 0; b < resamples; ++b) {
    long sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += diff[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1))];
    }
    if (sum <= 0) ++not_better;
  }
  out.p_value = static_cast<double>(not_better + 1) / static_cast<double>(resamples + 1);
  return out;
}

std::vector<bool> completion_outcomes(const BatchRun& run) {
  std::vector<bool> out;
  out.reserve(run.episodes.size());
  for (const auto& e : run.episodes) out.push_back(e.success_completion);
  return out;
}

}  // namespace pcd

// Command-line front end: run, sweep, mi, demo, calibrate.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcd/calibrate.hpp"
#include "pcd/config.hpp"
#include "pcd/error.hpp"
#include "pcd/harness.hpp"
#include "pcd/mi.hpp"
#include "pcd/results.hpp"

namespace {

using namespace pcd;

// Flags shared by every command; unset flags leave the config untouched.
struct RunFlags {
  std::string config_path;
  std::optional<double> alpha;
  std::optional<std::size_t> n_samples;
  std::optional<std::string> bandwidth;
  std::optional<std::string> prompt;
  std::optional<std::string> inpaint;
  std::optional<std::string> tracker;
  std::optional<std::string> task;
  std::optional<std::string> shift;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<double> lambda;
  std::optional<std::string> method;
  std::optional<std::size_t> threads;
  std::optional<double> miss_prob;
  std::optional<std::size_t> jitter;
  bool both_metrics = false;
  std::string out;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--alpha", alpha, "contrast strength");
    app.add_option("--n-samples", n_samples, "samples per branch for sampler policies");
    app.add_option("--bandwidth", bandwidth, "KDE bandwidth: scott or a value");
    app.add_option("--prompt", prompt, "annotation prompt: point|box|detector");
    app.add_option("--inpaint", inpaint, "inpainting: constant|mean|diffusion");
    app.add_option("--tracker", tracker, "mask tracker: exact|nearest");
    app.add_option("--task", task, "reach|pick_place|move_near|stack");
    app.add_option("--shift", shift, "none|spatial|brightness|distractors|texture");
    app.add_option("--trials", trials, "episodes per batch");
    app.add_option("--seed", seed, "base seed; trial i uses seed + i");
    app.add_option("--policy", policy, "autoregressive|diffusion|expert");
    app.add_option("--lambda", lambda, "spurious reliance of the mock policy");
    app.add_option("--method", method, "baseline|pcd");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_option("--miss-prob", miss_prob, "detector miss probability");
    app.add_option("--jitter", jitter, "detector jitter in cells");
    app.add_flag("--both-metrics", both_metrics, "also evaluate success at the max step");
    app.add_option("--out", out, "output file");
  }

  PcdRunConfig build() const {
    PcdRunConfig cfg = config_path.empty() ? PcdRunConfig{} : load_config(config_path);
    if (task) {
      const std::size_t keep = cfg.task.max_steps;
      const TaskKind previous = cfg.task.kind;
      cfg.task = make_task(parse_task_kind(*task));
      if (cfg.task.kind == previous) cfg.task.max_steps = keep;
    }
    if (shift) cfg.shift = parse_shift(*shift);
    if (policy) cfg.policy.kind = parse_policy_kind(*policy);
    if (lambda) cfg.policy.mixture.lambda = *lambda;
    if (alpha) cfg.decode.alpha = *alpha;
    if (n_samples) cfg.kde.n_samples = *n_samples;
    if (bandwidth) cfg = apply_axis_value(cfg, SweepAxis::kBandwidth, *bandwidth);
    if (prompt) cfg.mask.prompt = parse_prompt_kind(*prompt);
    if (inpaint) cfg.mask.inpaint = parse_inpaint(*inpaint);
    if (tracker) {
      if (*tracker == "exact") {
        cfg.mask.tracker = TrackerMode::kExact;
      } else if (*tracker == "nearest") {
        cfg.mask.tracker = TrackerMode::kNearestMatch;
      } else {
        throw Error("unknown tracker '" + *tracker + "'");
      }
    }
    if (miss_prob) cfg.mask.miss_prob = *miss_prob;
    if (jitter) cfg.mask.jitter = *jitter;
    if (trials) cfg.trials = *trials;
    if (seed) cfg.base_seed = *seed;
    if (method) cfg.method = parse_method(*method);
    if (threads) cfg.threads = *threads;
    if (both_metrics) cfg.both_metrics = true;
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_result(const BatchResult& r) {
  std::printf("%-10s %-11s %-8s alpha=%-4g trials=%zu completion=%.3f maxstep=%.3f mean_ms=%.2f hash=%016llx\n",
              r.task.c_str(), r.shift.c_str(), r.method.c_str(), r.alpha, r.n_trials,
              r.rate_completion, r.rate_maxstep, r.mean_ms,
              static_cast<unsigned long long>(r.config_hash));
}

std::vector<std::string> default_axis_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAnnotation: return {"detector", "detector:miss=0.2", "detector:jitter=2"};
    case SweepAxis::kInpaint: return {"constant", "mean", "diffusion"};
    case SweepAxis::kBandwidth: return {"scott", "0.002", "0.005", "0.01"};
    case SweepAxis::kSamples: return {"4", "8", "24"};
    case SweepAxis::kShift: return {"none", "spatial", "brightness", "distractors", "texture"};
  }
  return {};
}

int cmd_run(const RunFlags& flags) {
  const PcdRunConfig cfg = flags.build();
  const BatchResult r = evaluate_batch(cfg);
  print_result(r);
  if (!flags.out.empty()) append_result(flags.out, r);
  return 0;
}

int cmd_sweep(const RunFlags& flags, const std::string& axis_name, const std::string& values,
              const std::string& csv_path) {
  const PcdRunConfig cfg = flags.build();
  std::ofstream csv_file;
  if (!csv_path.empty()) {
    csv_file.open(csv_path);
    if (!csv_file) throw Error("cannot write '" + csv_path + "'");
  }
  std::ostream& csv = csv_path.empty() ? std::cout : csv_file;

  if (axis_name == "alpha") {
    std::vector<double> alphas;
    for (const auto& v : split(values.empty() ? "0,0.2,0.4,0.6,0.8,1.0" : values)) {
      alphas.push_back(std::stod(v));
    }
    const auto rows = sweep_alpha(cfg, alphas);
    for (const auto& [_, r] : rows) {
      print_result(r);
      if (!flags.out.empty()) append_result(flags.out, r);
    }
    write_alpha_csv(csv, rows);
    return 0;
  }
  const SweepAxis axis = parse_sweep_axis(axis_name);
  const auto rows =
      sweep_axis(cfg, axis, values.empty() ? default_axis_values(axis) : split(values));
  for (const auto& row : rows) {
    std::printf("%-20s ", row.value.c_str());
    print_result(row.result);
    if (!flags.out.empty()) append_result(flags.out, row.result);
  }
  write_sweep_csv(csv, axis_name, rows);
  return 0;
}

int cmd_mi(const RunFlags& flags, std::size_t rollouts) {
  const PcdRunConfig cfg = flags.build();
  const MIReport r = estimate_mi(cfg.policy, cfg.task, cfg.shift, rollouts, cfg.base_seed, cfg.kde);
  std::printf("policy=%s lambda=%g shift=%s samples=%zu\n", to_string(cfg.policy.kind),
              cfg.policy.mixture.lambda, shift_name(cfg.shift).c_str(), r.samples);
  std::printf("I(action; spurious) = %.4f bits   H(spurious) = %.4f\n", r.mi_action_vs_spurious,
              r.entropy_spurious);
  std::printf("I(action; target)   = %.4f bits   H(target)   = %.4f\n", r.mi_action_vs_target,
              r.entropy_target);
  std::printf("H(action)           = %.4f bits\n", r.entropy_action);
  return 0;
}

const char* grip_label(double g) {
  if (g <= -kGripThreshold) return "open ";
  if (g >= kGripThreshold) return "close";
  return "hold ";
}

int cmd_demo(const RunFlags& flags, const std::string& frames_dir) {
  PcdRunConfig cfg = flags.build();
  std::filesystem::create_directories(frames_dir);
  WorldConfig world_cfg;
  world_cfg.terminate_on_success = !cfg.both_metrics;
  const World world(cfg.task, cfg.shift, world_cfg);
  const Policy policy = Policy::make(cfg.policy, world_cfg);
  const EpisodeOptions opts{cfg.decode, cfg.kde, cfg.mask};

  std::size_t frame = 0;
  const StepObserver observer = [&](const Scene& scene, std::span<const double> action) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%04zu.ppm", frame++);
    write_ppm(world.render(scene), std::filesystem::path(frames_dir) / name);
    const SceneObject* subject = scene.find(world.task().subject());
    std::printf("step %04zu  gripper (%.3f, %.3f)  %s  light (%.3f, %.3f)  action (%+.3f, %+.3f, %s)\n",
                scene.step, scene.gripper.x, scene.gripper.y,
                subject ? ("subject (" + std::to_string(subject->position.x).substr(0, 5) + ", " +
                           std::to_string(subject->position.y).substr(0, 5) + ")")
                              .c_str()
                        : "subject ?",
                scene.spurious.light.x, scene.spurious.light.y, action[0], action[1],
                grip_label(action[2]));
  };
  const EpisodeRecord rec =
      cfg.method == Method::kPcd ? run_pcd_episode(policy, world, opts, cfg.base_seed, observer)
                                 : run_baseline_episode(policy, world, opts, cfg.base_seed, observer);
  std::printf("%s: %s after %zu steps (%.1f ms)%s%s\n", to_string(cfg.method),
              rec.success_completion ? "success" : "failure", rec.total_steps, rec.duration_ms,
              rec.error.empty() ? "" : "  error: ", rec.error.c_str());
  std::printf("frames written to %s\n", frames_dir.c_str());
  return 0;
}

int cmd_calibrate(const RunFlags& flags, const std::string& lambdas, const std::string& out) {
  CalibrationSpec spec = default_calibration();
  if (!flags.config_path.empty() || flags.task || flags.policy || flags.trials || flags.seed ||
      flags.n_samples || flags.alpha) {
    spec.base = flags.build();
  }
  if (flags.shift) spec.shifts = {parse_shift(*flags.shift)};
  if (flags.lambda) spec.lambdas = {*flags.lambda};
  if (!lambdas.empty()) {
    spec.lambdas.clear();
    for (const auto& v : split(lambdas)) spec.lambdas.push_back(std::stod(v));
  }
  const CalibrationResult result = calibrate(spec, [](const CalibrationRow& row) {
    std::printf("lambda=%.2f shift=%-11s baseline=%.3f\n", row.lambda, row.shift.c_str(),
                row.baseline_rate);
    std::fflush(stdout);
  });
  if (!result.chosen) {
    std::fprintf(stderr, "no (lambda, shift) gives a baseline rate in [%.2f, %.2f]\n",
                 spec.rate_low, spec.rate_high);
    return 1;
  }
  std::printf("chosen lambda=%.2f shift=%s baseline=%.3f pcd=%.3f\n",
              result.chosen->policy.mixture.lambda, shift_name(result.chosen->shift).c_str(),
              result.baseline_rate, result.pcd_rate);
  write_benchmark(out, result);
  std::printf("benchmark written to %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy contrastive decoding on a planar manipulation simulator"};
  app.require_subcommand(1);

  RunFlags run_flags, sweep_flags, mi_flags, demo_flags, cal_flags;

  auto* run = app.add_subcommand("run", "evaluate one batch (baseline or PCD)");
  run_flags.attach(*run);

  auto* sweep = app.add_subcommand("sweep", "single-axis ablation on shared seeds");
  sweep_flags.attach(*sweep);
  std::string axis, values, csv;
  sweep->add_option("--axis", axis, "alpha|annotation|inpaint|bandwidth|n|shift")->required();
  sweep->add_option("--values", values, "comma-separated axis values");
  sweep->add_option("--csv", csv, "write CSV here instead of stdout");

  auto* mi = app.add_subcommand("mi", "mutual information between actions and scene factors");
  mi_flags.attach(*mi);
  std::size_t rollouts = 5000;
  mi->add_option("--rollouts", rollouts, "episodes to roll out (>= 100)");

  auto* demo = app.add_subcommand("demo", "one episode with per-step frames");
  demo_flags.attach(*demo);
  std::string frames_dir;
  demo->add_option("--frames-dir", frames_dir, "directory for step_%04d.ppm frames")->required();

  auto* cal = app.add_subcommand("calibrate", "pick (lambda, shift) for the benchmark");
  cal_flags.attach(*cal);
  cal_flags.out = "calibration/benchmark.json";
  std::string cal_lambdas;
  cal->add_option("--lambdas", cal_lambdas, "comma-separated lambda grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, axis, values, csv);
    if (mi->parsed()) return cmd_mi(mi_flags, rollouts);
    if (demo->parsed()) return cmd_demo(demo_flags, frames_dir);
    if (cal->parsed()) return cmd_calibrate(cal_flags, cal_lambdas, cal_flags.out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcd/harness.hpp"

namespace pcd {

// Grid search for a (lambda, shift) pair whose baseline completion rate
// falls in [rate_low, rate_high], preferring the one closest to target_rate.
struct CalibrationSpec {
  PcdRunConfig base;  // task, policy kind, decode, trials, seed
  std::vector<double> lambdas;
  std::vector<ShiftSpec> shifts;
  double rate_low = 0.2;
  double rate_high = 0.5;
  double target_rate = 0.35;

  void validate() const;
};

CalibrationSpec default_calibration();

struct CalibrationRow {
  double lambda = 0.0;
  std::string shift;
  double baseline_rate = 0.0;
};

struct CalibrationResult {
  std::vector<CalibrationRow> rows;
  std::optional<PcdRunConfig> chosen;  // PCD config at the chosen point
  double baseline_rate = 0.0;
  double pcd_rate = 0.0;  // recorded for reference, not used for the choice
};

using CalibrationProgress = std::function<void(const CalibrationRow&)>;

CalibrationResult calibrate(const CalibrationSpec& spec, const CalibrationProgress& progress = {});

// Benchmark document: {"config": {...}, "baseline_rate", "pcd_rate", "grid": [...]}
std::string benchmark_to_json(const CalibrationResult& result);
void write_benchmark(const std::filesystem::path& path, const CalibrationResult& result);

struct Benchmark {
  PcdRunConfig config;
  double baseline_rate = 0.0;
  double pcd_rate = 0.0;
};

Benchmark load_benchmark(const std::filesystem::path& path);

}  // namespace pcd

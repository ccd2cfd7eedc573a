#include "pcd/calibrate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pcd/config.hpp"
#include "pcd/error.hpp"

namespace pcd {

void CalibrationSpec::validate() const {
  base.validate();
  if (lambdas.empty() || shifts.empty()) throw Error("calibration grid is empty");
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error("calibration lambdas must lie in [0, 1]");
  }
  for (const auto& s : shifts) validate_shift(s);
  if (!(rate_low <= target_rate && target_rate <= rate_high)) {
    throw Error("calibration target must lie within the rate window");
  }
}

CalibrationSpec default_calibration() {
  CalibrationSpec spec;
  spec.base.task = make_task(TaskKind::kReach);
  spec.base.policy.kind = PolicyKind::kDiffusion;
  spec.base.method = Method::kPcd;
  spec.base.decode.alpha = 1.0;
  spec.base.trials = 500;
  spec.base.base_seed = 1000;
  for (int i = 6; i <= 18; ++i) spec.lambdas.push_back(i * 0.05);
  spec.shifts = {BrightnessShift{}, TextureShift{}, DistractorShift{}, SpatialShift{}};
  return spec;
}

CalibrationResult calibrate(const CalibrationSpec& spec, const CalibrationProgress& progress) {
  spec.validate();
  CalibrationResult result;
  double best_gap = 2.0;
  for (const auto& shift : spec.shifts) {
    for (double lambda : spec.lambdas) {
      PcdRunConfig cfg = spec.base;
      cfg.shift = shift;
      cfg.policy.mixture.lambda = lambda;
      cfg.method = Method::kBaseline;
      const BatchResult base = evaluate_batch(cfg);
      CalibrationRow row{lambda, shift_name(shift), base.rate_completion};
      result.rows.push_back(row);
      if (progress) progress(row);
      const double gap = std::abs(base.rate_completion - spec.target_rate);
      const bool in_window =
          base.rate_completion >= spec.rate_low && base.rate_completion <= spec.rate_high;
      if (in_window && gap < best_gap) {
        best_gap = gap;
        cfg.method = Method::kPcd;
        result.chosen = cfg;
        result.baseline_rate = base.rate_completion;
      }
    }
  }
  if (result.chosen) result.pcd_rate = evaluate_batch(*result.chosen).rate_completion;
  return result;
}

std::string benchmark_to_json(const CalibrationResult& result) {
  if (!result.chosen) throw Error("calibration found no (lambda, shift) in the rate window");
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& row : result.rows) {
    grid.push_back({{"lambda", row.lambda}, {"shift", row.shift}, {"baseline_rate", row.baseline_rate}});
  }
  const nlohmann::json doc{{"config", nlohmann::json::parse(config_to_json(*result.chosen))},
                           {"baseline_rate", result.baseline_rate},
                           {"pcd_rate", result.pcd_rate},
                           {"grid", grid}};
  return doc.dump(2);
}

void write_benchmark(const std::filesystem::path& path, const CalibrationResult& result) {
  const std::string text = benchmark_to_json(result);
  std::ofstream out(path);
  if (!out) throw Error("cannot write benchmark '" + path.string() + "'");
  out << text << '\n';
}

Benchmark load_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open benchmark '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buffer.str());
    Benchmark b;
    b.config = config_from_json(doc.at("config").dump());
    b.baseline_rate = doc.at("baseline_rate").get<double>();
    b.pcd_rate = doc.at("pcd_rate").get<double>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed benchmark '" + path.string() + "': " + e.what());
  }
}

}  // namespace pcd

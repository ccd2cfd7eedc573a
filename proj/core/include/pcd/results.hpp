#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcd/harness.hpp"

namespace pcd {

struct ResultLine {
  BatchResult result;
  std::string timestamp;  // ISO 8601, UTC
};

// One JSON object per line:
// {config_hash, task, shift, method, alpha, n, trials, rate_completion,
//  rate_maxstep, mean_ms, seed, timestamp}
std::string result_to_json_line(const BatchResult& result, const std::string& timestamp);
ResultLine result_from_json_line(const std::string& line);

// Appends one line; creates the file if needed.
void append_result(const std::filesystem::path& path, const BatchResult& result);
// Errors name the 1-based line number of the first malformed line.
std::vector<ResultLine> load_results(const std::filesystem::path& path);

std::string utc_timestamp();

// Plot-ready CSV with one row per axis value.
void write_sweep_csv(std::ostream& out, const std::string& axis, const std::vector<SweepRow>& rows);
void write_alpha_csv(std::ostream& out, const std::vector<std::pair<double, BatchResult>>& rows);

}  // namespace pcd

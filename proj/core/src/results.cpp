#include "pcd/results.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pcd/error.hpp"

namespace pcd {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw Error("config_hash must be 16 hex digits");
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used, 16);
  if (used != s.size()) throw Error("config_hash must be 16 hex digits");
  return v;
}

std::size_t successes_from_rate(double rate, std::size_t trials) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(trials)));
}

void csv_row(std::ostream& out, const std::string& value, const BatchResult& r) {
  out << value << ',' << r.task << ',' << r.shift << ',' << r.method << ',' << r.alpha << ','
      << r.n_samples << ',' << r.n_trials << ',' << r.rate_completion << ',' << r.rate_maxstep << ','
      << r.mean_ms << ',' << hex64(r.config_hash) << '\n';
}

}  // namespace

std::string result_to_json_line(const BatchResult& r, const std::string& timestamp) {
  const json j{{"config_hash", hex64(r.config_hash)},
               {"task", r.task},
               {"shift", r.shift},
               {"method", r.method},
               {"alpha", r.alpha},
               {"n", r.n_samples},
               {"trials", r.n_trials},
               {"rate_completion", r.rate_completion},
               {"rate_maxstep", r.rate_maxstep},
               {"mean_ms", r.mean_ms},
               {"seed", r.seed},
               {"timestamp", timestamp}};
  return j.dump();
}

ResultLine result_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw Error("result line is not a JSON object");
  ResultLine out;
  BatchResult& r = out.result;
  r.config_hash = parse_hex64(j.at("config_hash").get<std::string>());
  r.task = j.at("task").get<std::string>();
  r.shift = j.at("shift").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.alpha = j.at("alpha").get<double>();
  r.n_samples = j.at("n").get<std::size_t>();
  r.n_trials = j.at("trials").get<std::size_t>();
  r.rate_completion = j.at("rate_completion").get<double>();
  r.rate_maxstep = j.at("rate_maxstep").get<double>();
  r.mean_ms = j.at("mean_ms").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  out.timestamp = j.at("timestamp").get<std::string>();
  if (r.n_trials == 0) throw Error("trials must be >= 1");
  r.successes_completion = successes_from_rate(r.rate_completion, r.n_trials);
  r.successes_maxstep = successes_from_rate(r.rate_maxstep, r.n_trials);
  return out;
}

void append_result(const std::filesystem::path& path, const BatchResult& result) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot open results file '" + path.string() + "'");
  out << result_to_json_line(result, utc_timestamp()) << '\n';
}

std::vector<ResultLine> load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results file '" + path.string() + "'");
  std::vector<ResultLine> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(result_from_json_line(line));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(number) + ": malformed result line: " +
                  e.what());
    }
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_sweep_csv(std::ostream& out, const std::string& axis, const std::vector<SweepRow>& rows) {
  out << axis << ",task,shift,method,alpha,n,trials,rate_completion,rate_maxstep,mean_ms,config_hash\n";
  for (const auto& row : rows) csv_row(out, row.value, row.result);
}

void write_alpha_csv(std::ostream& out, const std::vector<std::pair<double, BatchResult>>& rows) {
  out << "alpha_value,task,shift,method,alpha,n,trials,rate_completion,rate_maxstep,mean_ms,config_hash\n";
  for (const auto& [alpha, r] : rows) {
    std::ostringstream v;
    v << alpha;
    csv_row(out, v.str(), r);
  }
}

}  // namespace pcd

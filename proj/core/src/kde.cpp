#include "pcd/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pcd/error.hpp"

namespace pcd {
namespace {

void require_finite(std::span<const double> samples, const char* what) {
  if (samples.empty()) throw Error("no samples");
  for (double x : samples) {
    if (!std::isfinite(x)) throw Error(std::string(what) + ": non-finite sample");
  }
}

// Padding bandwidth for a grid shared by both branches.
double padding_bandwidth(std::span<const double> a, std::span<const double> b,
                         const BandwidthRule& rule) {
  return std::max(resolve_bandwidth(a, rule), resolve_bandwidth(b, rule));
}

}  // namespace

std::vector<double> SampleMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void KdeConfig::validate() const {
  if (n_samples < 1) throw Error("kde: n_samples must be positive");
  if (grid_count < 16) throw Error("kde: grid_count must be >= 16");
  if (!(support_pad >= 0.0)) throw Error("kde: support_pad must be >= 0");
  if (const auto* fixed = std::get_if<FixedBandwidth>(&bandwidth)) {
    if (!(fixed->value > 0.0) || !std::isfinite(fixed->value)) {
      throw Error("kde: fixed bandwidth must be > 0");
    }
  }
}

double scott_bandwidth(std::span<const double> samples) {
  require_finite(samples, "scott_bandwidth");
  const auto n = static_cast<double>(samples.size());
  if (samples.size() < 2) return kMinBandwidth;
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sigma = std::sqrt(ss / (n - 1.0));
  return std::max(sigma * std::pow(n, -0.2), kMinBandwidth);
}

double resolve_bandwidth(std::span<const double> samples, const BandwidthRule& rule) {
  if (const auto* fixed = std::get_if<FixedBandwidth>(&rule)) return fixed->value;
  return scott_bandwidth(samples);
}

CategoricalDist kde_estimate(std::span<const double> samples, const BinGrid& grid,
                             double bandwidth) {
  require_finite(samples, "kde_estimate");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error("kde_estimate: bandwidth must be > 0");
  }
  const double inv_b = 1.0 / bandwidth;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> density(grid.count(), 0.0);
  for (std::size_t k = 0; k < grid.count(); ++k) {
    const double x = grid.center(k);
    double acc = 0.0;
    for (double s : samples) {
      const double u = (x - s) * inv_b;
      acc += std::exp(-0.5 * u * u);
    }
    density[k] = norm * acc;
  }
  if (std::all_of(density.begin(), density.end(), [](double d) { return d == 0.0; })) {
    // Kernels far narrower than a cell: use the b -> 0 limit, a histogram.
    for (double s : samples) density[grid.index_of(s)] += 1.0;
  }
  return CategoricalDist::from_weights(grid, std::move(density));
}

BinGrid kde_grid(std::span<const double> samples_a, std::span<const double> samples_b,
                 const KdeConfig& config) {
  config.validate();
  require_finite(samples_a, "kde_grid");
  require_finite(samples_b, "kde_grid");
  const double b = padding_bandwidth(samples_a, samples_b, config.bandwidth);
  const auto [min_a, max_a] = std::minmax_element(samples_a.begin(), samples_a.end());
  const auto [min_b, max_b] = std::minmax_element(samples_b.begin(), samples_b.end());
  const double lo = std::min(*min_a, *min_b) - config.support_pad * b;
  double hi = std::max(*max_a, *max_b) + config.support_pad * b;
  if (!(hi > lo)) hi = lo + kMinBandwidth;
  return BinGrid(lo, hi, config.grid_count);
}

std::pair<ActionDistribution, ActionDistribution> kde_estimate_multi(
    const SampleMatrix& samples, const KdeConfig& config, const SampleMatrix& samples_masked) {
  config.validate();
  if (samples.cols() != samples_masked.cols()) {
    throw Error("kde_estimate_multi: branches have different action dimensions");
  }
  if (samples.cols() == 0) throw Error("kde_estimate_multi: zero action dimensions");
  if (samples.rows() < 2 || samples_masked.rows() < 2) {
    throw Error("kde_estimate_multi: need at least 2 samples per branch");
  }
  std::vector<CategoricalDist> original;
  std::vector<CategoricalDist> masked;
  for (std::size_t t = 0; t < samples.cols(); ++t) {
    const auto col = samples.column(t);
    const auto col_masked = samples_masked.column(t);
    try {
      const BinGrid grid = kde_grid(col, col_masked, config);
      original.push_back(kde_estimate(col, grid, resolve_bandwidth(col, config.bandwidth)));
      masked.push_back(
          kde_estimate(col_masked, grid, resolve_bandwidth(col_masked, config.bandwidth)));
    } catch (const Error& e) {
      throw Error("kde_estimate_multi: dimension " + std::to_string(t) + ": " + e.what());
    }
  }
  return {ActionDistribution(std::move(original)), ActionDistribution(std::move(masked))};
}

ActionDistribution kde_estimate_single(const SampleMatrix& samples, const KdeConfig& config) {
  config.validate();
  if (samples.cols() == 0 || samples.rows() < 1) throw Error("kde_estimate_single: no samples");
  std::vector<CategoricalDist> out;
  for (std::size_t t = 0; t < samples.cols(); ++t) {
    const auto col = samples.column(t);
    try {
      const BinGrid grid = kde_grid(col, col, config);
      out.push_back(kde_estimate(col, grid, resolve_bandwidth(col, config.bandwidth)));
    } catch (const Error& e) {
      throw Error("kde_estimate_single: dimension " + std::to_string(t) + ": " + e.what());
    }
  }
  return ActionDistribution(std::move(out));
}

}  // namespace pcd

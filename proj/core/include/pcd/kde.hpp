#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "pcd/action_dist.hpp"

namespace pcd {

// Row-major N x M matrix of sampled actions.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct FixedBandwidth {
  double value;
};
struct ScottBandwidth {};
using BandwidthRule = std::variant<FixedBandwidth, ScottBandwidth>;

struct KdeConfig {
  std::size_t n_samples = 24;
  BandwidthRule bandwidth = ScottBandwidth{};
  std::size_t grid_count = 256;
  double support_pad = 4.0;  // in bandwidth multiples

  void validate() const;
};

inline constexpr double kMinBandwidth = 1e-6;

// sigma_hat * N^(-1/5) with the (N-1) sample deviation, floored at 1e-6.
double scott_bandwidth(std::span<const double> samples);

double resolve_bandwidth(std::span<const double> samples, const BandwidthRule& rule);

// Gaussian-kernel density evaluated at bin centers, normalized to unit mass.
CategoricalDist kde_estimate(std::span<const double> samples, const BinGrid& grid,
                             double bandwidth);

// One grid covering both sample sets with support_pad bandwidths of margin.
BinGrid kde_grid(std::span<const double> samples_a, std::span<const double> samples_b,
                 const KdeConfig& config);

// Per-dimension estimates for the original and masked branches on shared grids.
std::pair<ActionDistribution, ActionDistribution> kde_estimate_multi(
    const SampleMatrix& samples, const KdeConfig& config, const SampleMatrix& samples_masked);

// Single-branch estimate; each dimension's grid spans only `samples`.
ActionDistribution kde_estimate_single(const SampleMatrix& samples, const KdeConfig& config);

}  // namespace pcd

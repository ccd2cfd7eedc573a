#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcd/rng.hpp"

namespace pcd {

// Uniform partition of [lower, upper] into `count` cells.
class BinGrid {
 public:
  BinGrid(double lower, double upper, std::size_t count);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  std::size_t count() const { return count_; }
  double width() const { return (upper_ - lower_) / static_cast<double>(count_); }
  double center(std::size_t k) const;

  // Index of the cell containing x, clamped to the grid.
  std::size_t index_of(double x) const;

  bool operator==(const BinGrid&) const = default;

 private:
  double lower_;
  double upper_;
  std::size_t count_;
};

// Probability vector over the cells of a BinGrid. Construction validates
// non-negativity, finiteness and unit mass (within 1e-9).
class CategoricalDist {
 public:
  CategoricalDist(BinGrid grid, std::vector<double> probs);

  // Normalizes non-negative weights; throws if they sum to zero.
  static CategoricalDist from_weights(BinGrid grid, std::vector<double> weights);
  static CategoricalDist uniform(BinGrid grid);

  const BinGrid& grid() const { return grid_; }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::size_t size() const { return probs_.size(); }

  // Lowest index of maximal probability.
  std::size_t argmax() const;

 private:
  BinGrid grid_;
  std::vector<double> probs_;
};

// Product of independent per-dimension marginals.
class ActionDistribution {
 public:
  explicit ActionDistribution(std::vector<CategoricalDist> dims);

  std::size_t dims() const { return dims_.size(); }
  const CategoricalDist& operator[](std::size_t t) const { return dims_[t]; }
  const std::vector<CategoricalDist>& marginals() const { return dims_; }

 private:
  std::vector<CategoricalDist> dims_;
};

enum class Selection { kGreedy, kSample };

struct DecodeConfig {
  double alpha = 1.0;
  double prob_floor = 1e-8;
  Selection selection = Selection::kGreedy;

  void validate() const;
};

// Contrastive reweighting w_k = p_k * (p_k / max(q_k, floor))^alpha,
// renormalized. alpha == 0 returns p unchanged.
CategoricalDist contrastive_combine(const CategoricalDist& p,
                                    const CategoricalDist& p_masked,
                                    const DecodeConfig& cfg);

ActionDistribution contrastive_combine_multi(const ActionDistribution& p,
                                             const ActionDistribution& p_masked,
                                             const DecodeConfig& cfg);

// Index chosen for one marginal: argmax (lowest index on ties) or a draw.
std::size_t select_bin(const CategoricalDist& dist, Selection selection, Rng& rng);

// Per-dimension bin centers of the selected cells.
std::vector<double> select_action(const ActionDistribution& dist,
                                  const DecodeConfig& cfg, Rng& rng);

}  // namespace pcd

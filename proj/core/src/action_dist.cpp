#include "pcd/action_dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pcd/error.hpp"

namespace pcd {

BinGrid::BinGrid(double lower, double upper, std::size_t count)
    : lower_(lower), upper_(upper), count_(count) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower)) {
    throw Error("bin grid requires finite bounds with upper > lower");
  }
  if (count < 2) throw Error("bin grid requires at least 2 bins");
}

double BinGrid::center(std::size_t k) const {
  return lower_ + (static_cast<double>(k) + 0.5) * width();
}

std::size_t BinGrid::index_of(double x) const {
  const double pos = std::floor((x - lower_) / width());
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), count_ - 1);
}

CategoricalDist::CategoricalDist(BinGrid grid, std::vector<double> probs)
    : grid_(grid), probs_(std::move(probs)) {
  if (probs_.size() != grid_.count()) {
    throw Error("probability vector length does not match grid");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw Error("probabilities must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "probabilities sum to " << total << ", expected 1";
    throw Error(os.str());
  }
}

CategoricalDist CategoricalDist::from_weights(BinGrid grid, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw Error("weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error("weights sum to zero");
  for (double& w : weights) w /= total;
  return CategoricalDist(grid, std::move(weights));
}

CategoricalDist CategoricalDist::uniform(BinGrid grid) {
  std::vector<double> probs(grid.count(), 1.0 / static_cast<double>(grid.count()));
  return CategoricalDist(grid, std::move(probs));
}

std::size_t CategoricalDist::argmax() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs_.size(); ++k) {
    if (probs_[k] > probs_[best]) best = k;
  }
  return best;
}

ActionDistribution::ActionDistribution(std::vector<CategoricalDist> dims)
    : dims_(std::move(dims)) {
  if (dims_.empty()) throw Error("action distribution needs at least one dimension");
}

void DecodeConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error("alpha must be finite and >= 0");
  if (!(prob_floor > 0.0) || prob_floor > 1e-3) throw Error("prob_floor must lie in (0, 1e-3]");
}

CategoricalDist contrastive_combine(const CategoricalDist& p,
                                    const CategoricalDist& p_masked,
                                    const DecodeConfig& cfg) {
  cfg.validate();
  if (!(p.grid() == p_masked.grid())) {
    throw Error("contrastive_combine: distributions are defined on different grids");
  }
  if (cfg.alpha == 0.0) return p;

  const std::size_t n = p.size();
  const double log_floor = std::log(cfg.prob_floor);
  std::vector<double> log_w(n, -std::numeric_limits<double>::infinity());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (p[k] <= 0.0) continue;
    const double log_p = std::log(p[k]);
    const double log_q = std::max(std::log(p_masked[k]), log_floor);
    log_w[k] = log_p + cfg.alpha * (log_p - log_q);
    peak = std::max(peak, log_w[k]);
  }
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (std::isfinite(log_w[k])) w[k] = std::exp(log_w[k] - peak);
  }
  return CategoricalDist::from_weights(p.grid(), std::move(w));
}

ActionDistribution contrastive_combine_multi(const ActionDistribution& p,
                                             const ActionDistribution& p_masked,
                                             const DecodeConfig& cfg) {
  if (p.dims() != p_masked.dims()) {
    throw Error("contrastive_combine_multi: dimension count mismatch");
  }
  std::vector<CategoricalDist> out;
  out.reserve(p.dims());
  for (std::size_t t = 0; t < p.dims(); ++t) {
    out.push_back(contrastive_combine(p[t], p_masked[t], cfg));
  }
  return ActionDistribution(std::move(out));
}

std::size_t select_bin(const CategoricalDist& dist, Selection selection, Rng& rng) {
  if (selection == Selection::kGreedy) return dist.argmax();
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (dist[k] <= 0.0) continue;
    last_positive = k;
    cumulative += dist[k];
    if (u < cumulative) return k;
  }
  return last_positive;
}

std::vector<double> select_action(const ActionDistribution& dist,
                                  const DecodeConfig& cfg, Rng& rng) {
  std::vector<double> action;
  action.reserve(dist.dims());
  for (const auto& marginal : dist.marginals()) {
    action.push_back(marginal.grid().center(select_bin(marginal, cfg.selection, rng)));
  }
  return action;
}

}  // namespace pcd

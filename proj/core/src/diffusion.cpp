#include "pcd/diffusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "pcd/error.hpp"

namespace pcd {

void DiffusionSchedule::validate() const {
  if (steps < 1) throw Error("diffusion schedule needs at least one step");
  for (const auto* v : {&alpha, &gamma, &sigma, &alpha_bar, &posterior_coef}) {
    if (v->size() != steps) throw Error("diffusion schedule vectors must have length K");
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) throw Error("diffusion schedule sigma must be >= 0");
  }
  for (double ab : alpha_bar) {
    if (!(ab >= 0.0 && ab < 1.0)) throw Error("diffusion schedule alpha_bar must lie in [0, 1)");
  }
}

DiffusionSchedule cosine_schedule(std::size_t steps, double offset, VarianceMode variance) {
  if (steps < 1) throw Error("diffusion schedule needs at least one step");
  const auto K = static_cast<double>(steps);
  auto f = [&](double t) {
    const double c = std::cos((t / K + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
    return c * c;
  };
  DiffusionSchedule s;
  s.steps = steps;
  s.variance = variance;
  double alpha_bar_prev = 1.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double ratio = f(static_cast<double>(k)) / f(static_cast<double>(k - 1));
    const double beta = std::min(1.0 - ratio, 0.999);
    const double alpha_bar = alpha_bar_prev * (1.0 - beta);
    s.alpha.push_back(1.0 / std::sqrt(1.0 - beta));
    s.gamma.push_back(beta / std::sqrt(1.0 - alpha_bar));
    s.sigma.push_back(std::sqrt(beta * (1.0 - alpha_bar_prev) / (1.0 - alpha_bar)));
    s.alpha_bar.push_back(alpha_bar);
    s.posterior_coef.push_back(std::sqrt(alpha_bar_prev) * beta / (1.0 - alpha_bar));
    alpha_bar_prev = alpha_bar;
  }
  return s;
}

void GaussianMixture::validate() const {
  if (components.empty()) throw Error("gaussian mixture has no components");
  const std::size_t m = dims();
  if (m == 0) throw Error("gaussian mixture has zero dimensions");
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw Error("gaussian mixture weights must be > 0");
    if (c.mean.size() != m || c.stddev.size() != m) throw Error("gaussian mixture dimension mismatch");
    for (double s : c.stddev) {
      if (!(s > 0.0)) throw Error("gaussian mixture stddev must be > 0");
    }
  }
}

MixtureNoisePredictor::MixtureNoisePredictor(GaussianMixture target) : target_(std::move(target)) {
  target_.validate();
  for (const auto& c : target_.components) log_weight_.push_back(std::log(c.weight));
}

void MixtureNoisePredictor::predict(std::span<const double> x, double alpha_bar,
                                    std::span<double> eps, std::span<double> x0_variance) const {
  const std::size_t m = target_.dims();
  const std::size_t nc = target_.components.size();
  const double signal = std::sqrt(alpha_bar);
  const double noise_var = 1.0 - alpha_bar;

  // Responsibilities of each component for x under the noised marginal.
  // Mixtures here have one or two components; larger ones go to the heap.
  std::array<double, 4> small{};
  std::vector<double> large;
  if (nc > small.size()) large.resize(nc);
  const std::span<double> log_r = nc > small.size() ? std::span<double>(large)
                                                     : std::span<double>(small.data(), nc);
  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = target_.components[j];
    double lp = log_weight_[j];
    for (std::size_t d = 0; d < m; ++d) {
      const double v = alpha_bar * c.stddev[d] * c.stddev[d] + noise_var;
      const double r = x[d] - signal * c.mean[d];
      lp -= 0.5 * (r * r / v + std::log(v));
    }
    log_r[j] = lp;
  }
  const double peak = *std::max_element(log_r.begin(), log_r.end());
  double total = 0.0;
  for (double& lr : log_r) {
    lr = std::exp(lr - peak);
    total += lr;
  }

  for (std::size_t d = 0; d < m; ++d) {
    double score = 0.0;
    double mean_x0 = 0.0;
    double second_x0 = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      const auto& c = target_.components[j];
      const double resp = log_r[j] / total;
      const double s2 = c.stddev[d] * c.stddev[d];
      const double v = alpha_bar * s2 + noise_var;
      const double r = x[d] - signal * c.mean[d];
      score -= resp * r / v;
      const double m0 = c.mean[d] + signal * s2 / v * r;
      const double v0 = s2 * noise_var / v;
      mean_x0 += resp * m0;
      second_x0 += resp * (v0 + m0 * m0);
    }
    eps[d] = -std::sqrt(noise_var) * score;
    x0_variance[d] = std::max(second_x0 - mean_x0 * mean_x0, 0.0);
  }
}

void ZeroNoisePredictor::predict(std::span<const double>, double, std::span<double> eps,
                                 std::span<double> x0_variance) const {
  std::fill(eps.begin(), eps.end(), 0.0);
  std::fill(x0_variance.begin(), x0_variance.end(), 0.0);
}

namespace {

// One reverse step from a into out; eps and x0_var are scratch of the same size.
void denoise_into(std::span<const double> a, std::size_t i, const DiffusionSchedule& schedule,
                  const NoisePredictor& score, Rng& rng, std::span<double> eps,
                  std::span<double> x0_var, std::span<double> out) {
  score.predict(a, schedule.alpha_bar[i], eps, x0_var);
  const double base_var = schedule.sigma[i] * schedule.sigma[i];
  const double coef2 = schedule.posterior_coef[i] * schedule.posterior_coef[i];
  for (std::size_t d = 0; d < a.size(); ++d) {
    double var = base_var;
    if (schedule.variance == VarianceMode::kMomentMatched) var += coef2 * x0_var[d];
    const double z = rng.normal();
    out[d] = schedule.alpha[i] * (a[d] - schedule.gamma[i] * eps[d]) + std::sqrt(var) * z;
  }
}

}  // namespace

std::vector<double> denoise_step(std::span<const double> a_k, std::size_t k,
                                 const DiffusionSchedule& schedule, const NoisePredictor& score,
                                 Rng& rng) {
  if (k < 1 || k > schedule.steps) throw Error("denoise_step: step index out of range");
  const std::size_t m = a_k.size();
  std::vector<double> scratch(2 * m);
  std::vector<double> out(m);
  denoise_into(a_k, k - 1, schedule, score, rng, std::span(scratch).first(m),
               std::span(scratch).last(m), out);
  return out;
}

std::vector<double> sample_chain(std::size_t dims, const DiffusionSchedule& schedule,
                                 const NoisePredictor& score, Rng& rng) {
  std::vector<double> buf(4 * dims);
  const std::span<double> all(buf);
  std::span<double> a = all.subspan(0, dims);
  std::span<double> next = all.subspan(dims, dims);
  const std::span<double> eps = all.subspan(2 * dims, dims);
  const std::span<double> x0_var = all.subspan(3 * dims, dims);
  for (double& v : a) v = rng.normal();
  for (std::size_t k = schedule.steps; k >= 1; --k) {
    denoise_into(a, k - 1, schedule, score, rng, eps, x0_var, next);
    std::swap(a, next);
  }
  return {a.begin(), a.end()};
}

MixtureDiffusionPolicy::MixtureDiffusionPolicy(SpuriousMixtureParams params,
                                               DiffusionSchedule schedule, ActionLimits limits)
    : params_(params), schedule_(std::move(schedule)), limits_(limits) {
  params_.validate();
  schedule_.validate();
}

GaussianMixture MixtureDiffusionPolicy::target(const Observation& obs,
                                               const Instruction& instr) const {
  const BranchTargets targets = branch_targets(obs, instr, limits_);
  const double informed = 1.0 / std::sqrt(2.0 * params_.sharpness);
  auto component = [&](double weight, const std::optional<std::vector<double>>& mean) {
    GaussianMixture::Component c;
    c.weight = weight;
    c.mean = mean.value_or(std::vector<double>(kActionDims, 0.0));
    c.stddev.assign(kActionDims, mean ? informed : kUninformedStddev);
    return c;
  };
  GaussianMixture mix;
  if (params_.lambda < 1.0) mix.components.push_back(component(1.0 - params_.lambda, targets.object));
  if (params_.lambda > 0.0) mix.components.push_back(component(params_.lambda, targets.spurious));
  return mix;
}

std::vector<double> MixtureDiffusionPolicy::to_action(std::span<const double> normalized) const {
  return {normalized[0] * limits_.step_max, normalized[1] * limits_.step_max, normalized[2]};
}

SampleMatrix MixtureDiffusionPolicy::sample(const Observation& obs, const Instruction& instr,
                                            std::size_t n, Rng& rng) const {
  if (n < 1) throw Error("sample: n must be >= 1");
  const MixtureNoisePredictor score(target(obs, instr));
  SampleMatrix out(n, kActionDims);
  for (std::size_t r = 0; r < n; ++r) {
    const auto a = to_action(sample_chain(kActionDims, schedule_, score, rng));
    std::copy(a.begin(), a.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace pcd

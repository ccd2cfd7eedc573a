#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcd/policy.hpp"

namespace pcd {

// Reverse-process variance. kFixed uses sigma_k as given; kMomentMatched adds
// the posterior-mean uncertainty of the analytic target so that each reverse
// step matches the first two moments of the true reverse conditional.
enum class VarianceMode { kFixed, kMomentMatched };

// Per-step parameters of the update
//   a^{k-1} = alpha_k * (a^k - gamma_k * eps(a^k, k)) + N(0, sigma_k^2 I).
// Vectors are indexed by k - 1 for k in [1, steps].
struct DiffusionSchedule {
  std::size_t steps = 0;
  std::vector<double> alpha;
  std::vector<double> gamma;
  std::vector<double> sigma;
  std::vector<double> alpha_bar;       // cumulative signal level at step k
  std::vector<double> posterior_coef;  // weight of x0 in the reverse mean
  VarianceMode variance = VarianceMode::kFixed;

  void validate() const;
};

// Cosine noise schedule with DDPM ancestral parameters and posterior
// variance; betas are clipped at 0.999.
DiffusionSchedule cosine_schedule(std::size_t steps, double offset = 0.008,
                                  VarianceMode variance = VarianceMode::kMomentMatched);

// Diagonal Gaussian mixture over R^M serving as the analytic denoising target.
struct GaussianMixture {
  struct Component {
    double weight;
    std::vector<double> mean;
    std::vector<double> stddev;
  };
  std::vector<Component> components;

  std::size_t dims() const { return components.empty() ? 0 : components.front().mean.size(); }
  void validate() const;
};

// Analytic noise prediction of a noised target and the posterior variance
// of the clean sample, both at signal level alpha_bar.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual void predict(std::span<const double> x, double alpha_bar, std::span<double> eps,
                       std::span<double> x0_variance) const = 0;
};

class MixtureNoisePredictor : public NoisePredictor {
 public:
  explicit MixtureNoisePredictor(GaussianMixture target);
  void predict(std::span<const double> x, double alpha_bar, std::span<double> eps,
               std::span<double> x0_variance) const override;
  const GaussianMixture& target() const { return target_; }

 private:
  GaussianMixture target_;
  std::vector<double> log_weight_;
};

// Predicts zero noise everywhere.
class ZeroNoisePredictor : public NoisePredictor {
 public:
  void predict(std::span<const double> x, double alpha_bar, std::span<double> eps,
               std::span<double> x0_variance) const override;
};

// One reverse step from level k (1 <= k <= steps) to k - 1.
std::vector<double> denoise_step(std::span<const double> a_k, std::size_t k,
                                 const DiffusionSchedule& schedule, const NoisePredictor& score,
                                 Rng& rng);

// Full chain from N(0, I) noise; returns the terminal sample.
std::vector<double> sample_chain(std::size_t dims, const DiffusionSchedule& schedule,
                                 const NoisePredictor& score, Rng& rng);

// Sampler policy whose denoiser is the analytic score of the same two-branch
// mixture as SpuriousMixturePolicy, in normalized action units.
class MixtureDiffusionPolicy : public SamplerPolicy {
 public:
  MixtureDiffusionPolicy(SpuriousMixtureParams params, DiffusionSchedule schedule,
                         ActionLimits limits = {});

  std::size_t action_dims() const override { return kActionDims; }
  SampleMatrix sample(const Observation& obs, const Instruction& instr, std::size_t n,
                      Rng& rng) const override;

  // Mixture the denoiser targets for an observation (normalized units).
  GaussianMixture target(const Observation& obs, const Instruction& instr) const;
  // Maps normalized samples back to action units.
  std::vector<double> to_action(std::span<const double> normalized) const;

  const DiffusionSchedule& schedule() const { return schedule_; }

 private:
  SpuriousMixtureParams params_;
  DiffusionSchedule schedule_;
  ActionLimits limits_;
};

// Stddev of an uninformed branch in normalized units (that of U(-1, 1)).
inline constexpr double kUninformedStddev = 0.5773502691896258;

}  // namespace pcd

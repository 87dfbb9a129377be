#pragma once

#include <utility>
#include <vector>

#include "diffcls/diffusion.hpp"
#include "diffcls/rng.hpp"

namespace diffcls {

// Synthetic population: class k emits x0 ~ Normal(means[k], std_dev^2 I).
// Every class-conditional covariance is the same isotropic ball, so the
// Bayes-optimal decision rule is nearest-mean.
struct GaussianWorld {
  std::vector<Vec> means;  // K rows, all of equal dimension
  double std_dev = 1.0;
  std::uint64_t seed = 0;

  int num_classes() const { return static_cast<int>(means.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
  void validate() const;  // throws std::invalid_argument on structural problems
};

// Closed-form conditional denoiser for a Gaussian class prior. With
// x_t = alpha x0 + sigma eps and x0 ~ Normal(mu_k, s^2 I), the posterior mean
// of x0 given x_t is
//   (alpha s^2 x_t + sigma^2 mu_k) / (alpha^2 s^2 + sigma^2).
Vec posterior_mean_denoise(const GaussianWorld& world, const NoiseSchedule& schedule,
                           const Condition& condition, const NoisedObservation& noised);

// ScoreModel adapter over posterior_mean_denoise. condition.class_id indexes
// world.means. Holds copies, so temporaries are safe to pass.
class PosteriorMeanDenoiser : public ScoreModel {
 public:
  PosteriorMeanDenoiser(GaussianWorld world, NoiseSchedule schedule)
      : world_(std::move(world)), schedule_(std::move(schedule)) {}
  Vec denoise(const Vec& x_t, double t, const Condition& condition) const override;

 private:
  GaussianWorld world_;
  NoiseSchedule schedule_;
};

// Posterior-mean denoiser for a class-dependent Gaussian-mixture prior:
// class k's observations are an equal-weight mixture over components[k], each
// Normal(mu_c, std_dev^2 I). The posterior mean is the responsibility-weighted
// combination of per-component posterior means, with responsibilities taken
// from the marginal x_t | c ~ Normal(alpha mu_c, (alpha^2 s^2 + sigma^2) I).
class MixturePosteriorDenoiser : public ScoreModel {
 public:
  MixturePosteriorDenoiser(std::vector<std::vector<Vec>> components_per_class, double std_dev,
                           NoiseSchedule schedule);
  Vec denoise(const Vec& x_t, double t, const Condition& condition) const override;

 private:
  std::vector<std::vector<Vec>> components_;
  double std_dev_;
  NoiseSchedule schedule_;
};

// Nearest-mean rule: argmin_k ||x0 - means[k]||^2, ties resolved toward the
// lowest class id. Equal isotropic covariances make this the Bayes classifier.
int bayes_classify(const GaussianWorld& world, const Vec& x0);

// One draw from class class_id.
Vec generate_world_sample(const GaussianWorld& world, int class_id, Rng& rng);

// Rejection-samples K means inside a centered cube until every pair is at
// least min_separation apart (Euclidean). The cube half-width starts at
// max(min_separation, 1) and doubles after each failed batch; throws
// std::runtime_error with a diagnostic if max_attempts batches all fail.
std::vector<Vec> generate_separated_means(int num_classes, int dim, double min_separation,
                                          Rng& rng, int max_attempts = 64);

struct LabeledDataset {
  std::vector<Vec> examples;
  std::vector<int> labels;  // aligned with examples

  std::size_t size() const { return examples.size(); }
};

// n examples with labels drawn uniformly over classes.
LabeledDataset sample_dataset(const GaussianWorld& world, int n, Rng& rng);

}  // namespace diffcls

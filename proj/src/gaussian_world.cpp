#include "diffcls/gaussian_world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace diffcls {

void GaussianWorld::validate() const {
  if (means.empty()) {
    throw std::invalid_argument("GaussianWorld: at least one class mean is required");
  }
  const std::size_t d = means[0].size();
  if (d == 0) {
    throw std::invalid_argument("GaussianWorld: means must have positive dimension");
  }
  for (const Vec& mu : means) {
    if (mu.size() != d) {
      throw std::invalid_argument("GaussianWorld: all means must share one dimension");
    }
  }
  if (!(std_dev > 0.0)) {
    throw std::invalid_argument("GaussianWorld: std_dev must be positive");
  }
}

Vec posterior_mean_denoise(const GaussianWorld& world, const NoiseSchedule& schedule,
                           const Condition& condition, const NoisedObservation& noised) {
  if (condition.class_id < 0 || condition.class_id >= world.num_classes()) {
    throw std::invalid_argument("posterior_mean_denoise: class_id " +
                                std::to_string(condition.class_id) + " out of range");
  }
  const Vec& mu = world.means[static_cast<std::size_t>(condition.class_id)];
  if (noised.data.size() != mu.size()) {
    throw std::invalid_argument("posterior_mean_denoise: observation dimension mismatch");
  }
  const ScheduleEval se = schedule.eval(noised.time);
  const double s2 = world.std_dev * world.std_dev;
  const double sigma2 = se.sigma * se.sigma;
  const double denom = se.alpha * se.alpha * s2 + sigma2;
  Vec out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out[i] = (se.alpha * s2 * noised.data[i] + sigma2 * mu[i]) / denom;
  }
  return out;
}

Vec PosteriorMeanDenoiser::denoise(const Vec& x_t, double t, const Condition& condition) const {
  NoisedObservation obs;
  obs.data = x_t;
  obs.time = t;
  return posterior_mean_denoise(world_, schedule_, condition, obs);
}

MixturePosteriorDenoiser::MixturePosteriorDenoiser(
    std::vector<std::vector<Vec>> components_per_class, double std_dev, NoiseSchedule schedule)
    : components_(std::move(components_per_class)),
      std_dev_(std_dev),
      schedule_(std::move(schedule)) {
  if (components_.empty()) {
    throw std::invalid_argument("MixturePosteriorDenoiser: at least one class is required");
  }
  if (!(std_dev_ > 0.0)) {
    throw std::invalid_argument("MixturePosteriorDenoiser: std_dev must be positive");
  }
  std::size_t dim = 0;
  for (const auto& cls : components_) {
    if (cls.empty()) {
      throw std::invalid_argument("MixturePosteriorDenoiser: every class needs a component");
    }
    for (const Vec& mu : cls) {
      if (dim == 0) dim = mu.size();
      if (mu.size() != dim || dim == 0) {
        throw std::invalid_argument("MixturePosteriorDenoiser: components must share a dimension");
      }
    }
  }
}

Vec MixturePosteriorDenoiser::denoise(const Vec& x_t, double t, const Condition& condition) const {
  if (condition.class_id < 0 ||
      condition.class_id >= static_cast<int>(components_.size())) {
    throw std::invalid_argument("MixturePosteriorDenoiser: class_id out of range");
  }
  const auto& components = components_[static_cast<std::size_t>(condition.class_id)];
  if (x_t.size() != components.front().size()) {
    throw std::invalid_argument("MixturePosteriorDenoiser: observation dimension mismatch");
  }
  const ScheduleEval se = schedule_.eval(t);
  const double s2 = std_dev_ * std_dev_;
  const double sigma2 = se.sigma * se.sigma;
  const double marginal_var = se.alpha * se.alpha * s2 + sigma2;

  // Log-responsibilities of the equal-weight components, stabilized.
  std::vector<double> log_r(components.size());
  double max_log_r = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < components.size(); ++c) {
    double dist_sq = 0.0;
    for (std::size_t i = 0; i < x_t.size(); ++i) {
      const double d = x_t[i] - se.alpha * components[c][i];
      dist_sq += d * d;
    }
    log_r[c] = -dist_sq / (2.0 * marginal_var);
    max_log_r = std::max(max_log_r, log_r[c]);
  }
  double z = 0.0;
  for (double& lr : log_r) {
    lr = std::exp(lr - max_log_r);
    z += lr;
  }

  Vec out(x_t.size(), 0.0);
  for (std::size_t c = 0; c < components.size(); ++c) {
    const double r = log_r[c] / z;
    for (std::size_t i = 0; i < x_t.size(); ++i) {
      out[i] += r * (se.alpha * s2 * x_t[i] + sigma2 * components[c][i]) / marginal_var;
    }
  }
  return out;
}

int bayes_classify(const GaussianWorld& world, const Vec& x0) {
  world.validate();
  if (x0.size() != static_cast<std::size_t>(world.dim())) {
    throw std::invalid_argument("bayes_classify: example dimension mismatch");
  }
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < world.num_classes(); ++k) {
    const Vec& mu = world.means[static_cast<std::size_t>(k)];
    double dist = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double d = x0[i] - mu[i];
      dist += d * d;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  return best;
}

Vec generate_world_sample(const GaussianWorld& world, int class_id, Rng& rng) {
  if (class_id < 0 || class_id >= world.num_classes()) {
    throw std::invalid_argument("generate_world_sample: class_id out of range");
  }
  const Vec& mu = world.means[static_cast<std::size_t>(class_id)];
  Vec x(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    x[i] = mu[i] + world.std_dev * rng.normal();
  }
  return x;
}

std::vector<Vec> generate_separated_means(int num_classes, int dim, double min_separation,
                                          Rng& rng, int max_attempts) {
  if (num_classes <= 0 || dim <= 0) {
    throw std::invalid_argument("generate_separated_means: num_classes and dim must be positive");
  }
  if (!(min_separation >= 0.0)) {
    throw std::invalid_argument("generate_separated_means: min_separation must be non-negative");
  }
  const double min_sep_sq = min_separation * min_separation;
  double half_width = std::max(min_separation, 1.0);
  for (int attempt = 0; attempt < max_attempts; ++attempt, half_width *= 2.0) {
    std::vector<Vec> means;
    means.reserve(static_cast<std::size_t>(num_classes));
    // Greedy fill: each candidate gets a bounded number of redraws before the
    // whole batch restarts with a wider cube.
    const int per_point_tries = 256;
    bool batch_ok = true;
    for (int k = 0; k < num_classes && batch_ok; ++k) {
      bool placed = false;
      for (int trial = 0; trial < per_point_tries; ++trial) {
        Vec candidate(static_cast<std::size_t>(dim));
        for (double& c : candidate) c = rng.uniform(-half_width, half_width);
        bool far_enough = true;
        for (const Vec& mu : means) {
          double dist_sq = 0.0;
          for (int i = 0; i < dim; ++i) {
            const double d = candidate[static_cast<std::size_t>(i)] -
                             mu[static_cast<std::size_t>(i)];
            dist_sq += d * d;
          }
          if (dist_sq < min_sep_sq) {
            far_enough = false;
            break;
          }
        }
        if (far_enough) {
          means.push_back(std::move(candidate));
          placed = true;
          break;
        }
      }
      if (!placed) batch_ok = false;
    }
    if (batch_ok) return means;
  }
  throw std::runtime_error(
      "generate_separated_means: failed to place " + std::to_string(num_classes) +
      " means with separation " + std::to_string(min_separation) + " in dimension " +
      std::to_string(dim) + " after " + std::to_string(max_attempts) +
      " widening rounds; lower the separation or raise the dimension");
}

LabeledDataset sample_dataset(const GaussianWorld& world, int n, Rng& rng) {
  world.validate();
  if (n < 0) {
    throw std::invalid_argument("sample_dataset: n must be non-negative");
  }
  LabeledDataset ds;
  ds.examples.reserve(static_cast<std::size_t>(n));
  ds.labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(world.num_classes())));
    ds.labels.push_back(label);
    ds.examples.push_back(generate_world_sample(world, label, rng));
  }
  return ds;
}

}  // namespace diffcls

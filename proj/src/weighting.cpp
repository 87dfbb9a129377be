#include "diffcls/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace diffcls {

namespace {

constexpr double kSnrTimeFloor = 1e-4;  // Simple/VDM clamp; SNR diverges at t=0

void require_unit_interval(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("weighting time must lie in [0, 1], got " + std::to_string(t));
  }
}

}  // namespace

WeightingSpec WeightingSpec::simple() {
  WeightingSpec s;
  s.kind = WeightingKind::Simple;
  return s;
}

WeightingSpec WeightingSpec::vdm() {
  WeightingSpec s;
  s.kind = WeightingKind::VDM;
  return s;
}

WeightingSpec WeightingSpec::heuristic(double lambda) {
  WeightingSpec s;
  s.kind = WeightingKind::Heuristic;
  s.heuristic_lambda = lambda;
  return s;
}

WeightingSpec WeightingSpec::learned_table(const std::array<double, kNumBuckets>& v) {
  WeightingSpec s;
  s.kind = WeightingKind::Learned;
  s.learned = v;
  return s;
}

void WeightingSpec::validate() const {
  if (kind == WeightingKind::Heuristic && !(heuristic_lambda > 0.0)) {
    throw std::invalid_argument("WeightingSpec: heuristic lambda must be positive");
  }
  if (kind == WeightingKind::Learned) {
    for (double v : learned) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("WeightingSpec: learned table entries must be finite");
      }
    }
  }
}

int bucket_index(double t) {
  require_unit_interval(t);
  const int idx = static_cast<int>(std::floor(t / 0.05));
  return idx >= kNumBuckets ? kNumBuckets - 1 : idx;
}

double weight(const WeightingSpec& spec, const NoiseSchedule& schedule, double t) {
  require_unit_interval(t);
  switch (spec.kind) {
    case WeightingKind::Simple:
      return schedule.eval(std::max(t, kSnrTimeFloor)).snr;
    case WeightingKind::VDM:
      return schedule.snr_abs_derivative(std::max(t, kSnrTimeFloor));
    case WeightingKind::Heuristic:
      return std::exp(-spec.heuristic_lambda * t);
    case WeightingKind::Learned:
      return spec.learned[static_cast<std::size_t>(bucket_index(t))];
  }
  throw std::invalid_argument("weight: unknown weighting kind");
}

void BucketedScores::add(double t, double squared_error) {
  if (!std::isfinite(squared_error) || squared_error < 0.0) {
    throw std::invalid_argument("BucketedScores::add: squared error must be finite and >= 0");
  }
  const auto i = static_cast<std::size_t>(bucket_index(t));
  count[i] += 1;
  mean[i] += (squared_error - mean[i]) / static_cast<double>(count[i]);
}

namespace {

void validate_learn_inputs(const std::vector<std::vector<BucketedScores>>& bucketed,
                           const std::vector<int>& labels) {
  if (bucketed.empty()) {
    throw std::invalid_argument("learn_weights: at least one example is required");
  }
  if (bucketed.size() != labels.size()) {
    throw std::invalid_argument("learn_weights: one label per example is required");
  }
  const std::size_t num_classes = bucketed[0].size();
  if (num_classes < 2) {
    throw std::invalid_argument("learn_weights: at least two classes are required");
  }
  for (std::size_t x = 0; x < bucketed.size(); ++x) {
    if (bucketed[x].size() != num_classes) {
      throw std::invalid_argument("learn_weights: ragged example/class grid");
    }
    if (labels[x] < 0 || static_cast<std::size_t>(labels[x]) >= num_classes) {
      throw std::invalid_argument("learn_weights: label out of range");
    }
    for (const BucketedScores& bs : bucketed[x]) {
      for (int i = 0; i < kNumBuckets; ++i) {
        if (bs.count[static_cast<std::size_t>(i)] > 0 &&
            !std::isfinite(bs.mean[static_cast<std::size_t>(i)])) {
          throw std::invalid_argument("learn_weights: non-finite bucketed score");
        }
      }
    }
  }
}

double bucket_dot(const BucketedScores& bs, const std::array<double, kNumBuckets>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumBuckets; ++i) {
    if (bs.count[i] > 0) s += v[i] * bs.mean[i];
  }
  return s;
}

}  // namespace

double weight_loglik_and_grad(const std::vector<std::vector<BucketedScores>>& bucketed,
                              const std::vector<int>& labels,
                              const std::array<double, kNumBuckets>& v,
                              std::array<double, kNumBuckets>* grad) {
  validate_learn_inputs(bucketed, labels);
  const std::size_t num_examples = bucketed.size();
  const std::size_t num_classes = bucketed[0].size();
  if (grad) grad->fill(0.0);
  double loglik = 0.0;
  std::vector<double> logits(num_classes);
  std::vector<double> probs(num_classes);
  for (std::size_t x = 0; x < num_examples; ++x) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < num_classes; ++k) {
      logits[k] = -bucket_dot(bucketed[x][k], v);
      max_logit = std::max(max_logit, logits[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      probs[k] = std::exp(logits[k] - max_logit);
      z += probs[k];
    }
    for (double& p : probs) p /= z;
    const auto label = static_cast<std::size_t>(labels[x]);
    loglik += logits[label] - max_logit - std::log(z);
    if (grad) {
      // d/dv_i log p(label) = sum_k p_k b_i(x,k) - b_i(x,label)
      for (std::size_t k = 0; k < num_classes; ++k) {
        const BucketedScores& bs = bucketed[x][k];
        const double coeff = probs[k] - (k == label ? 1.0 : 0.0);
        for (std::size_t i = 0; i < kNumBuckets; ++i) {
          if (bs.count[i] > 0) (*grad)[i] += coeff * bs.mean[i];
        }
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(num_examples);
  if (grad) {
    for (double& g : *grad) g *= inv_n;
  }
  return loglik * inv_n;
}

std::array<double, kNumBuckets> learn_weights(
    const std::vector<std::vector<BucketedScores>>& bucketed, const std::vector<int>& labels,
    const LearnOptions& opts) {
  std::array<double, kNumBuckets> v;
  v.fill(1.0);
  std::array<double, kNumBuckets> grad{};
  double value = weight_loglik_and_grad(bucketed, labels, v, &grad);
  double step = opts.init_step;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    double grad_norm = 0.0;
    for (double g : grad) grad_norm += g * g;
    grad_norm = std::sqrt(grad_norm);
    if (grad_norm <= opts.grad_tol) break;
    // Backtracking ascent: halve the step until the objective improves.
    bool advanced = false;
    for (int shrink = 0; shrink < 60; ++shrink) {
      std::array<double, kNumBuckets> trial;
      for (std::size_t i = 0; i < kNumBuckets; ++i) trial[i] = v[i] + step * grad[i];
      std::array<double, kNumBuckets> trial_grad{};
      const double trial_value = weight_loglik_and_grad(bucketed, labels, trial, &trial_grad);
      if (trial_value > value) {
        v = trial;
        value = trial_value;
        grad = trial_grad;
        step *= 1.2;
        advanced = true;
        break;
      }
      step *= 0.5;
    }
    if (!advanced) break;  // no ascent direction at machine precision
  }
  return v;
}

}  // namespace diffcls

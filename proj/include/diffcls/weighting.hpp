#pragma once

#include <array>
#include <vector>

#include "diffcls/diffusion.hpp"

namespace diffcls {

inline constexpr int kNumBuckets = 20;

enum class WeightingKind { Simple, VDM, Heuristic, Learned };

// Timestep weighting w_t applied to per-round squared errors before
// averaging. Simple and VDM are schedule-derived; Heuristic is exp(-lambda t);
// Learned is a piecewise-constant 20-bucket table fitted on labeled data.
struct WeightingSpec {
  WeightingKind kind = WeightingKind::Heuristic;
  double heuristic_lambda = 7.0;
  std::array<double, kNumBuckets> learned{};

  static WeightingSpec simple();
  static WeightingSpec vdm();
  static WeightingSpec heuristic(double lambda = 7.0);
  static WeightingSpec learned_table(const std::array<double, kNumBuckets>& v);

  // Classification with a fitted table is supervised; everything else needs
  // no labels.
  bool zero_shot() const { return kind != WeightingKind::Learned; }
  void validate() const;  // throws std::invalid_argument
};

// floor(t / 0.05) with the t = 1 edge clamped into the last bucket.
int bucket_index(double t);

// Evaluates w_t. Simple and VDM clamp t up to 1e-4 before touching the
// schedule, since SNR diverges at t = 0.
double weight(const WeightingSpec& spec, const NoiseSchedule& schedule, double t);

// Per-(example, class) running mean of squared errors by timestep bucket;
// the feature vector consumed by the weight learner.
struct BucketedScores {
  std::array<double, kNumBuckets> mean{};
  std::array<std::int64_t, kNumBuckets> count{};

  void add(double t, double squared_error);
};

struct LearnOptions {
  double init_step = 1.0;
  int max_iters = 5000;
  double grad_tol = 1e-6;
};

// Mean log-likelihood of labels under p_v(y_k | x) = softmax_k(-sum_i v_i
// b_i(x, y_k)), with its gradient in v. Buckets a (example, class) pair never
// visited contribute nothing. Exposed separately so the gradient can be
// checked against finite differences.
double weight_loglik_and_grad(const std::vector<std::vector<BucketedScores>>& bucketed,
                              const std::vector<int>& labels,
                              const std::array<double, kNumBuckets>& v,
                              std::array<double, kNumBuckets>* grad);

// Full-batch gradient ascent on the objective above, from an all-ones start,
// with backtracking line search, until the gradient norm falls below
// opts.grad_tol or the iteration cap is reached.
std::array<double, kNumBuckets> learn_weights(
    const std::vector<std::vector<BucketedScores>>& bucketed, const std::vector<int>& labels,
    const LearnOptions& opts = {});

}  // namespace diffcls

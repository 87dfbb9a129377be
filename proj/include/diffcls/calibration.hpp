#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace diffcls {

struct TemperatureModel {
  double tau = 1.0;  // > 0
};

// Confidence from the number of model calls an episode consumed:
// sigmoid(-n/tau + beta), strictly decreasing in n for tau > 0.
struct PlattModel {
  double tau = 1.0;  // > 0
  double beta = 0.0;
};

struct ScoredExample {
  std::vector<std::pair<int, double>> scores;  // (class_id, weighted mean score)
  int true_class = 0;
};

struct CallCountOutcome {
  std::int64_t calls = 0;
  bool correct = false;
};

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_conf = 0.0;
  double accuracy = 0.0;
  std::int64_t count = 0;
};

struct ReliabilityReport {
  std::vector<ReliabilityBin> bins;  // occupied bins only, ascending
  double ece = 0.0;
};

// p_k proportional to exp(-score_k / tau), computed with max-subtraction.
// Needs the full per-class score estimates, so it is incompatible with
// pruned runs (survivor scores alone cannot normalize the distribution).
std::vector<std::pair<int, double>> score_softmax_probs(
    const std::vector<std::pair<int, double>>& weighted_scores, double tau);

double platt_confidence(const PlattModel& model, std::int64_t n);

// Mean negative log-likelihood of the true classes at a given temperature;
// the objective fit_temperature minimizes.
double temperature_nll(const std::vector<ScoredExample>& heldout, double tau);

// Golden-section search over log tau in [-10, 10] to tolerance 1e-6.
TemperatureModel fit_temperature(const std::vector<ScoredExample>& heldout);

// Unconstrained two-parameter logistic MLE p = sigmoid(w x + b) by full-batch
// gradient descent from (0, 0), with internal standardization of x. Exposed
// because fit_platt is a reparameterization of it.
std::pair<double, double> fit_logistic_binary(const std::vector<double>& xs,
                                              const std::vector<bool>& ys,
                                              double grad_tol = 1e-8);

// Fits (tau, beta) of the call-count confidence model by logistic MLE.
// When the unconstrained slope comes out non-negative (confidence not
// decreasing in n), the slope is clamped to a tiny negative value and the
// intercept refitted, keeping tau positive as the model requires.
PlattModel fit_platt(const std::vector<CallCountOutcome>& heldout);

// Equal-width bins over [0, 1], last bin right-closed; empty bins are
// dropped from the report. ECE = sum_b (count_b / N) * |accuracy_b - confidence_b|.
ReliabilityReport reliability_and_ece(const std::vector<double>& confidences,
                                      const std::vector<bool>& correctness, int n_bins = 10);

}  // namespace diffcls

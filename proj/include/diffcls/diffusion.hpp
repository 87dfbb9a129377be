#pragma once

#include <functional>
#include <string>
#include <vector>

#include "diffcls/rng.hpp"

namespace diffcls {

using Vec = std::vector<double>;

struct ScheduleEval {
  double alpha;
  double sigma;
  double snr;  // alpha^2 / sigma^2; +infinity at t = 0
};

// Continuous-time forward-process schedule on t in [0, 1].
// Boundary convention: alpha(0) = 1, sigma(0) = 0, alpha(1) = 0, sigma(1) = 1.
// Variance-preserving families keep alpha(t)^2 + sigma(t)^2 = 1.
class NoiseSchedule {
 public:
  // Default family: alpha(t) = cos(pi t / 2), sigma(t) = sin(pi t / 2).
  static NoiseSchedule cosine();

  // Pluggable family; the SNR derivative falls back to a central difference.
  static NoiseSchedule custom(std::string family, std::function<double(double)> alpha,
                              std::function<double(double)> sigma);

  double alpha(double t) const;
  double sigma(double t) const;
  ScheduleEval eval(double t) const;

  // |d SNR / dt|, analytic for the cosine family, numeric (h = 1e-6) otherwise.
  double snr_abs_derivative(double t) const;

  const std::string& family() const { return family_; }

 private:
  NoiseSchedule() = default;
  std::string family_;
  std::function<double(double)> alpha_fn_;
  std::function<double(double)> sigma_fn_;
  std::function<double(double)> snr_abs_deriv_fn_;  // empty -> numeric fallback
};

struct NoisedObservation {
  Vec data;           // x_t = alpha(t) x0 + sigma(t) eps
  double time = 0.0;  // t in [0, 1]
  Vec noise_draw;     // the eps that produced data, kept for reproducibility
};

struct Condition {
  int class_id = 0;
  std::string prompt;
};

// Conditional denoiser contract: predicts the clean observation from a noised
// one. Implementations must be deterministic given (x_t, t, condition) and
// preserve dimension.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual Vec denoise(const Vec& x_t, double t, const Condition& condition) const = 0;
};

// Draws x_t ~ Normal(alpha(t) x0, sigma(t)^2 I) and retains the noise.
NoisedObservation sample_forward(const Vec& x0, double t, const NoiseSchedule& schedule,
                                 Rng& rng);

// ||x0 - x_hat||_2^2 summed over coordinates; no normalization by dimension.
double squared_error_score(const Vec& x0, const Vec& x_hat);

// Label-to-prompt mapping: prompt_template's "{}" is replaced by the class
// name (or "class <k>" when no names are given). Class ids are 0..K-1.
std::vector<Condition> make_label_set(int num_classes,
                                      const std::vector<std::string>& names = {},
                                      const std::string& prompt_template = "A photo of a {}");

}  // namespace diffcls

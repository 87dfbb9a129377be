#include "diffcls/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace diffcls {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::vector<std::pair<int, double>> score_softmax_probs(
    const std::vector<std::pair<int, double>>& weighted_scores, double tau) {
  if (weighted_scores.empty()) {
    throw std::invalid_argument("score_softmax_probs: score map must be nonempty");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("score_softmax_probs: tau must be finite and positive");
  }
  double min_score = std::numeric_limits<double>::infinity();
  for (const auto& [cls, s] : weighted_scores) {
    if (!std::isfinite(s)) {
      throw std::invalid_argument("score_softmax_probs: scores must be finite");
    }
    min_score = std::min(min_score, s);
  }
  // Logit of class k is -s_k / tau; subtracting the max logit means
  // subtracting the min score.
  std::vector<std::pair<int, double>> probs;
  probs.reserve(weighted_scores.size());
  double z = 0.0;
  for (const auto& [cls, s] : weighted_scores) {
    const double p = std::exp(-(s - min_score) / tau);
    probs.emplace_back(cls, p);
    z += p;
  }
  for (auto& [cls, p] : probs) p /= z;
  return probs;
}

double platt_confidence(const PlattModel& model, std::int64_t n) {
  if (!(model.tau > 0.0)) {
    throw std::invalid_argument("platt_confidence: tau must be positive");
  }
  if (n < 0) {
    throw std::invalid_argument("platt_confidence: call count must be non-negative");
  }
  return sigmoid(-static_cast<double>(n) / model.tau + model.beta);
}

double temperature_nll(const std::vector<ScoredExample>& heldout, double tau) {
  if (heldout.empty()) {
    throw std::invalid_argument("temperature_nll: held-out set must be nonempty");
  }
  double nll = 0.0;
  for (const ScoredExample& ex : heldout) {
    const auto probs = score_softmax_probs(ex.scores, tau);
    double p_true = -1.0;
    for (const auto& [cls, p] : probs) {
      if (cls == ex.true_class) p_true = p;
    }
    if (p_true < 0.0) {
      throw std::invalid_argument("temperature_nll: true class missing from score map");
    }
    nll -= std::log(std::max(p_true, 1e-300));
  }
  return nll / static_cast<double>(heldout.size());
}

TemperatureModel fit_temperature(const std::vector<ScoredExample>& heldout) {
  if (heldout.empty()) {
    throw std::invalid_argument("fit_temperature: held-out set must be nonempty");
  }
  std::set<int> seen_classes;
  for (const ScoredExample& ex : heldout) {
    for (const auto& [cls, s] : ex.scores) {
      (void)s;
      seen_classes.insert(cls);
    }
  }
  if (seen_classes.size() < 2) {
    throw std::invalid_argument(
        "fit_temperature: at least two classes must be represented in the scores");
  }

  // Golden-section search for the NLL minimum over log tau.
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = -10.0;
  double hi = 10.0;
  double a = hi - kInvPhi * (hi - lo);
  double b = lo + kInvPhi * (hi - lo);
  double fa = temperature_nll(heldout, std::exp(a));
  double fb = temperature_nll(heldout, std::exp(b));
  while (hi - lo > 1e-6) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - kInvPhi * (hi - lo);
      fa = temperature_nll(heldout, std::exp(a));
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + kInvPhi * (hi - lo);
      fb = temperature_nll(heldout, std::exp(b));
    }
  }
  return TemperatureModel{std::exp(0.5 * (lo + hi))};
}

std::pair<double, double> fit_logistic_binary(const std::vector<double>& xs,
                                              const std::vector<bool>& ys, double grad_tol) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw std::invalid_argument("fit_logistic_binary: need equal-length nonempty inputs");
  }
  const std::size_t n = xs.size();
  double x_mean = 0.0;
  for (double x : xs) x_mean += x;
  x_mean /= static_cast<double>(n);
  double x_var = 0.0;
  for (double x : xs) x_var += (x - x_mean) * (x - x_mean);
  x_var /= static_cast<double>(n);
  const double x_std = x_var > 0.0 ? std::sqrt(x_var) : 1.0;

  auto nll_and_grad = [&](double w, double b, double* gw, double* gb) {
    double nll = 0.0;
    double dw = 0.0;
    double db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (xs[i] - x_mean) / x_std;
      const double p = sigmoid(w * z + b);
      const double y = ys[i] ? 1.0 : 0.0;
      nll -= y * std::log(std::max(p, 1e-300)) + (1.0 - y) * std::log(std::max(1.0 - p, 1e-300));
      const double resid = p - y;
      dw += resid * z;
      db += resid;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    if (gw) *gw = dw * inv_n;
    if (gb) *gb = db * inv_n;
    return nll * inv_n;
  };

  double w = 0.0;
  double b = 0.0;
  double gw = 0.0;
  double gb = 0.0;
  double value = nll_and_grad(w, b, &gw, &gb);
  double step = 1.0;
  constexpr int kMaxIters = 100000;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    if (std::sqrt(gw * gw + gb * gb) <= grad_tol) break;
    bool advanced = false;
    for (int shrink = 0; shrink < 60; ++shrink) {
      const double tw = w - step * gw;
      const double tb = b - step * gb;
      double tgw = 0.0;
      double tgb = 0.0;
      const double tv = nll_and_grad(tw, tb, &tgw, &tgb);
      if (tv < value) {
        w = tw;
        b = tb;
        gw = tgw;
        gb = tgb;
        value = tv;
        step *= 1.2;
        advanced = true;
        break;
      }
      step *= 0.5;
    }
    if (!advanced) break;
  }
  // Undo the standardization: w z + b = (w/std) x + (b - w mean/std).
  return {w / x_std, b - w * x_mean / x_std};
}

PlattModel fit_platt(const std::vector<CallCountOutcome>& heldout) {
  if (heldout.empty()) {
    throw std::invalid_argument("fit_platt: held-out set must be nonempty");
  }
  bool any_correct = false;
  bool any_incorrect = false;
  std::vector<double> xs;
  std::vector<bool> ys;
  xs.reserve(heldout.size());
  ys.reserve(heldout.size());
  for (const CallCountOutcome& o : heldout) {
    if (o.calls < 0) {
      throw std::invalid_argument("fit_platt: call counts must be non-negative");
    }
    xs.push_back(static_cast<double>(o.calls));
    ys.push_back(o.correct);
    (o.correct ? any_correct : any_incorrect) = true;
  }
  if (!any_correct || !any_incorrect) {
    throw std::invalid_argument(
        "fit_platt: both correct and incorrect outcomes are required (otherwise the "
        "model is non-identifiable)");
  }
  auto [w, b] = fit_logistic_binary(xs, ys);
  if (w >= 0.0) {
    // Confidence must decrease in n; pin the slope just below zero and refit
    // the intercept alone.
    w = -1e-12;
    std::vector<double> zeros(xs.size(), 0.0);
    const auto [w0, b0] = fit_logistic_binary(zeros, ys);
    (void)w0;
    b = b0;
  }
  return PlattModel{-1.0 / w, b};
}

ReliabilityReport reliability_and_ece(const std::vector<double>& confidences,
                                      const std::vector<bool>& correctness, int n_bins) {
  if (confidences.empty() || confidences.size() != correctness.size()) {
    throw std::invalid_argument("reliability_and_ece: need equal-length nonempty inputs");
  }
  if (n_bins < 1) {
    throw std::invalid_argument("reliability_and_ece: n_bins must be >= 1");
  }
  const std::size_t n = confidences.size();
  std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<std::int64_t> hits(static_cast<std::size_t>(n_bins), 0);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_bins), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw std::invalid_argument("reliability_and_ece: confidences must lie in [0, 1]");
    }
    int idx = static_cast<int>(std::floor(c * n_bins));
    if (idx >= n_bins) idx = n_bins - 1;  // c = 1 joins the right-closed last bin
    const auto b = static_cast<std::size_t>(idx);
    conf_sum[b] += c;
    counts[b] += 1;
    if (correctness[i]) hits[b] += 1;
  }
  ReliabilityReport report;
  const double width = 1.0 / n_bins;
  for (int b = 0; b < n_bins; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    if (counts[bi] == 0) continue;
    ReliabilityBin bin;
    bin.lo = b * width;
    bin.hi = (b + 1) * width;
    bin.count = counts[bi];
    bin.mean_conf = conf_sum[bi] / static_cast<double>(counts[bi]);
    bin.accuracy = static_cast<double>(hits[bi]) / static_cast<double>(counts[bi]);
    report.ece += (static_cast<double>(counts[bi]) / static_cast<double>(n)) *
                  std::fabs(bin.accuracy - bin.mean_conf);
    report.bins.push_back(bin);
  }
  return report;
}

}  // namespace diffcls

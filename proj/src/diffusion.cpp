#include "diffcls/diffusion.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace diffcls {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_unit_interval(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("schedule time must lie in [0, 1], got " + std::to_string(t));
  }
}

}  // namespace

NoiseSchedule NoiseSchedule::cosine() {
  NoiseSchedule s;
  s.family_ = "cosine";
  s.alpha_fn_ = [](double t) { return std::cos(kPi * t / 2.0); };
  s.sigma_fn_ = [](double t) { return std::sin(kPi * t / 2.0); };
  // SNR(t) = cot^2(pi t / 2); |SNR'(t)| = pi cos(pi t / 2) / sin^3(pi t / 2).
  s.snr_abs_deriv_fn_ = [](double t) {
    if (t <= 0.0) return std::numeric_limits<double>::infinity();
    const double half = kPi * t / 2.0;
    const double sin_half = std::sin(half);
    return kPi * std::cos(half) / (sin_half * sin_half * sin_half);
  };
  return s;
}

NoiseSchedule NoiseSchedule::custom(std::string family, std::function<double(double)> alpha,
                                    std::function<double(double)> sigma) {
  if (!alpha || !sigma) {
    throw std::invalid_argument("custom schedule requires both alpha and sigma functions");
  }
  NoiseSchedule s;
  s.family_ = std::move(family);
  s.alpha_fn_ = std::move(alpha);
  s.sigma_fn_ = std::move(sigma);
  return s;
}

double NoiseSchedule::alpha(double t) const {
  require_unit_interval(t);
  return alpha_fn_(t);
}

double NoiseSchedule::sigma(double t) const {
  require_unit_interval(t);
  return sigma_fn_(t);
}

ScheduleEval NoiseSchedule::eval(double t) const {
  require_unit_interval(t);
  ScheduleEval out;
  out.alpha = alpha_fn_(t);
  out.sigma = sigma_fn_(t);
  if (out.sigma == 0.0) {
    out.snr = std::numeric_limits<double>::infinity();
  } else {
    out.snr = (out.alpha * out.alpha) / (out.sigma * out.sigma);
  }
  return out;
}

double NoiseSchedule::snr_abs_derivative(double t) const {
  require_unit_interval(t);
  if (snr_abs_deriv_fn_) {
    return snr_abs_deriv_fn_(t);
  }
  // Central difference, clamped so both sample points stay inside [0, 1].
  const double h = 1e-6;
  const double lo = std::max(0.0, t - h);
  const double hi = std::min(1.0, t + h);
  auto snr_at = [this](double u) {
    const double a = alpha_fn_(u);
    const double s = sigma_fn_(u);
    if (s == 0.0) return std::numeric_limits<double>::infinity();
    return (a * a) / (s * s);
  };
  return std::abs((snr_at(hi) - snr_at(lo)) / (hi - lo));
}

NoisedObservation sample_forward(const Vec& x0, double t, const NoiseSchedule& schedule,
                                 Rng& rng) {
  const ScheduleEval se = schedule.eval(t);
  NoisedObservation obs;
  obs.time = t;
  obs.noise_draw.resize(x0.size());
  obs.data.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    obs.noise_draw[i] = rng.normal();
    obs.data[i] = se.alpha * x0[i] + se.sigma * obs.noise_draw[i];
  }
  return obs;
}

double squared_error_score(const Vec& x0, const Vec& x_hat) {
  if (x0.size() != x_hat.size()) {
    throw std::invalid_argument("squared_error_score: dimension mismatch (" +
                                std::to_string(x0.size()) + " vs " +
                                std::to_string(x_hat.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double d = x0[i] - x_hat[i];
    total += d * d;
  }
  return total;
}

std::vector<Condition> make_label_set(int num_classes, const std::vector<std::string>& names,
                                      const std::string& prompt_template) {
  if (num_classes <= 0) {
    throw std::invalid_argument("make_label_set: num_classes must be positive");
  }
  if (!names.empty() && static_cast<int>(names.size()) != num_classes) {
    throw std::invalid_argument("make_label_set: names size must match num_classes");
  }
  const std::size_t slot = prompt_template.find("{}");
  std::vector<Condition> labels;
  labels.reserve(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) {
    const std::string name = names.empty() ? ("class " + std::to_string(k)) : names[k];
    Condition c;
    c.class_id = k;
    if (slot == std::string::npos) {
      c.prompt = prompt_template;
    } else {
      c.prompt = prompt_template.substr(0, slot) + name + prompt_template.substr(slot + 2);
    }
    labels.push_back(std::move(c));
  }
  return labels;
}

}  // namespace diffcls

#include "diffcls/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace diffcls {

void PairedAccumulator::add(double diff) {
  n_ += 1;
  const double delta = diff - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (diff - mean_);
}

void PairedAccumulator::merge(const PairedAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double delta = other.mean_ - mean_;
  const double total = na + nb;
  mean_ += delta * (nb / total);
  m2_ += other.m2_ + delta * delta * (na * nb / total);
  n_ += other.n_;
}

double PairedAccumulator::mean() const {
  if (n_ < 1) {
    throw std::invalid_argument("PairedAccumulator::mean requires at least one sample");
  }
  return mean_;
}

double PairedAccumulator::variance() const {
  if (n_ < 2) {
    throw std::invalid_argument("PairedAccumulator::variance requires at least two samples");
  }
  return m2_ / static_cast<double>(n_ - 1);
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("regularized_incomplete_beta: a and b must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("regularized_incomplete_beta: x must lie in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double x, int df) {
  if (df < 1) {
    throw std::invalid_argument("student_t_sf: df must be >= 1, got " + std::to_string(df));
  }
  if (std::isnan(x)) return std::nan("");
  if (std::isinf(x)) return x > 0.0 ? 0.0 : 1.0;
  const double v = static_cast<double>(df);
  // For x >= 0: P(T > x) = I_{v/(v+x^2)}(v/2, 1/2) / 2; negative x by symmetry.
  const double z = v / (v + x * x);
  const double tail = 0.5 * regularized_incomplete_beta(v / 2.0, 0.5, z);
  return x >= 0.0 ? tail : 1.0 - tail;
}

double paired_ttest_pvalue(const PairedAccumulator& diffs, TestSide side) {
  if (diffs.count() < 2) {
    throw std::invalid_argument("paired_ttest_pvalue requires at least two paired samples");
  }
  const auto n = diffs.count();
  const double mean = diffs.mean();
  const double var = diffs.variance();
  if (var <= 0.0) {
    if (side == TestSide::OneSided) return mean <= 0.0 ? 1.0 : 0.0;
    return mean == 0.0 ? 1.0 : 0.0;
  }
  const double se = std::sqrt(var / static_cast<double>(n));
  const double t = mean / se;
  const int df = static_cast<int>(n - 1);
  if (side == TestSide::OneSided) return student_t_sf(t, df);
  return std::min(1.0, 2.0 * student_t_sf(std::fabs(t), df));
}

double binomial_cdf(int k, int n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binomial_cdf: need n >= 0 and p in [0, 1]");
  }
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  // P(X <= k) = I_{1-p}(n-k, k+1).
  return regularized_incomplete_beta(static_cast<double>(n - k), static_cast<double>(k + 1),
                                     1.0 - p);
}

double binomial_sf_geq(int k, int n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binomial_sf_geq: need n >= 0 and p in [0, 1]");
  }
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  // P(X >= k) = I_p(k, n-k+1).
  return regularized_incomplete_beta(static_cast<double>(k), static_cast<double>(n - k + 1), p);
}

double binomial_two_sided_pvalue(int k, int n, double p) {
  const double lower = binomial_cdf(k, n, p);
  const double upper = binomial_sf_geq(k, n, p);
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

std::pair<double, double> wilson_interval(int k, int n) {
  if (n <= 0 || k < 0 || k > n) {
    throw std::invalid_argument("wilson_interval: need 0 <= k <= n with n > 0");
  }
  constexpr double z = 1.959963984540054;  // two-sided 95% normal quantile
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace diffcls

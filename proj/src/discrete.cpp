#include "smq/discrete.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>

namespace smq {

namespace {

constexpr double kInversionLimit = 30.0;

std::uint64_t poisson_inversion(double mean, Stream& rng) {
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  // Cap guards against rounding leaving cdf just below u.
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::uint64_t poisson_ptrs(double mean, Stream& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

std::uint64_t binomial_inversion(std::uint64_t n, double p, Stream& rng) {
  const double q = 1.0 - p;
  const double ratio = p / q;
  double pk = std::pow(q, static_cast<double>(n));
  double cdf = pk;
  const double u = rng.uniform();
  std::uint64_t k = 0;
  while (u > cdf && k < n) {
    pk *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
    ++k;
    cdf += pk;
  }
  return k;
}

std::uint64_t binomial_btrs(std::uint64_t n, double p, Stream& rng) {
  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double vr = 0.92 - 4.2 / b;
  const double m = std::floor((nd + 1.0) * p);
  const double lpq = std::log(p / q);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > nd) continue;
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(k + 1.0) - std::lgamma(nd - k + 1.0) + (k - m) * lpq) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

std::uint64_t sample_poisson(double mean, Stream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson mean must be finite and nonnegative");
  }
  if (mean == 0.0) return 0;
  return mean < kInversionLimit ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

std::uint64_t sample_binomial(std::uint64_t n, double p, Stream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binomial probability must lie in [0, 1]");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - sample_binomial(n, 1.0 - p, rng);
  if (static_cast<double>(n) * p < kInversionLimit) return binomial_inversion(n, p, rng);
  return binomial_btrs(n, p, rng);
}

double poisson_pmf(std::uint64_t k, double mean) {
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

double poisson_upper_tail(std::uint64_t c, double mean) {
  if (c == 0) return 1.0;
  if (mean == 0.0) return 0.0;
  // P[X >= c] = P(c, mean), the regularized lower incomplete gamma.
  return boost::math::gamma_p(static_cast<double>(c), mean);
}

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) return 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return std::exp(std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
                  std::lgamma(nd - kd + 1.0) + kd * std::log(p) +
                  (nd - kd) * std::log1p(-p));
}

std::vector<double> poisson_pmf_table(double mean, std::uint64_t kmax) {
  std::vector<double> out(kmax + 1);
  for (std::uint64_t k = 0; k <= kmax; ++k) out[k] = poisson_pmf(k, mean);
  return out;
}

}  // namespace smq

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "smq/rng.hpp"

namespace smq {

/// Finite weighted sample of reals; weights default to uniform.
struct EmpiricalCloud {
  std::vector<double> values;
  std::optional<std::vector<double>> weights;

  EmpiricalCloud() = default;
  explicit EmpiricalCloud(std::vector<double> v,
                          std::optional<std::vector<double>> w = std::nullopt);
};

/// Wasserstein-1 distance between two empirical measures: sorted coupling
/// for equal-size uniform clouds, CDF-area integral otherwise.
double empirical_w1(const EmpiricalCloud& a, const EmpiricalCloud& b);

/// Counts (or masses) per integer value 0, 1, 2, ...
using Histogram = std::vector<double>;

Histogram count_histogram(std::span<const std::uint64_t> values);

/// Half the L1 distance between the two normalized histograms.
double pmf_tv(const Histogram& a, const Histogram& b);

/// sup |F_emp - cdf| over the sample points.
double ks_stat(std::span<const double> samples, const std::function<double(double)>& cdf);
double ks_two_sample(std::span<const double> a, std::span<const double> b);
/// Asymptotic 1% critical value of the one-sample KS statistic, 1.63 / sqrt(n).
double ks_critical_1pct(std::size_t n);
/// Two-sample analogue, 1.63 sqrt((n + m) / (n m)).
double ks_critical_1pct(std::size_t n, std::size_t m);

/// (sample k-th raw moment - predicted) / its standard error.
double moment_z(std::span<const double> samples, double predicted, unsigned order);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Sample mean and its standard error.
Estimate mean_estimate(std::span<const double> values);
/// Sample k-th raw moment and its standard error.
Estimate raw_moment(std::span<const double> values, unsigned order);

struct ChiSquareResult {
  double statistic;
  double dof;
  double p_value;
};

/// Goodness of fit of integer counts to a pmf; cells with expected count
/// below `min_expected` are pooled into their neighbours.
ChiSquareResult chi_square_gof(const Histogram& observed, const std::function<double(std::uint64_t)>& pmf,
                               double min_expected = 5.0);

struct Interval {
  double lo;
  double hi;
};

/// Percentile bootstrap interval for the mean.
Interval bootstrap_mean_ci(std::span<const double> values, std::size_t resamples, double level,
                           Stream& rng);

}  // namespace smq

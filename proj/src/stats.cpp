#include "smq/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace smq {

EmpiricalCloud::EmpiricalCloud(std::vector<double> v, std::optional<std::vector<double>> w)
    : values(std::move(v)), weights(std::move(w)) {
  if (values.empty()) throw std::invalid_argument("empirical cloud must be nonempty");
  if (weights) {
    if (weights->size() != values.size()) {
      throw std::invalid_argument("weights must match values");
    }
    double total = 0.0;
    for (double x : *weights) {
      if (x < 0.0) throw std::invalid_argument("weights must be nonnegative");
      total += x;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to 1");
  }
}

namespace {

std::vector<std::pair<double, double>> sorted_atoms(const EmpiricalCloud& c) {
  std::vector<std::pair<double, double>> atoms(c.values.size());
  const double u = 1.0 / static_cast<double>(c.values.size());
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    atoms[i] = {c.values[i], c.weights ? (*c.weights)[i] : u};
  }
  std::sort(atoms.begin(), atoms.end());
  return atoms;
}

}  // namespace

double empirical_w1(const EmpiricalCloud& a, const EmpiricalCloud& b) {
  if (a.values.empty() || b.values.empty()) {
    throw std::invalid_argument("empirical_w1 needs nonempty clouds");
  }
  if (!a.weights && !b.weights && a.values.size() == b.values.size()) {
    std::vector<double> x = a.values, y = b.values;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
  }
  // Integral of |F_a - F_b| over the merged breakpoints.
  const auto xa = sorted_atoms(a), xb = sorted_atoms(b);
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, total = 0.0;
  double prev = std::min(xa.front().first, xb.front().first);
  while (i < xa.size() || j < xb.size()) {
    const double next = (j >= xb.size() || (i < xa.size() && xa[i].first <= xb[j].first))
                            ? xa[i].first
                            : xb[j].first;
    total += std::fabs(fa - fb) * (next - prev);
    while (i < xa.size() && xa[i].first == next) fa += xa[i++].second;
    while (j < xb.size() && xb[j].first == next) fb += xb[j++].second;
    prev = next;
  }
  return total;
}

Histogram count_histogram(std::span<const std::uint64_t> values) {
  Histogram h;
  for (auto v : values) {
    if (v >= h.size()) h.resize(v + 1, 0.0);
    h[v] += 1.0;
  }
  return h;
}

double pmf_tv(const Histogram& a, const Histogram& b) {
  const double ta = std::accumulate(a.begin(), a.end(), 0.0);
  const double tb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(ta > 0.0) || !(tb > 0.0)) throw std::invalid_argument("pmf_tv needs positive mass");
  const std::size_t n = std::max(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = i < a.size() ? a[i] / ta : 0.0;
    const double q = i < b.size() ? b[i] / tb : 0.0;
    s += std::fabs(p - q);
  }
  return std::min(1.0, 0.5 * s);
}

double ks_stat(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_stat needs samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::fabs(static_cast<double>(i + 1) / n - f),
                  std::fabs(f - static_cast<double>(i) / n)});
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample needs samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / static_cast<double>(x.size()) -
                              static_cast<double>(j) / static_cast<double>(y.size())));
  }
  return d;
}

double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  return 1.63 * std::sqrt((nd + md) / (nd * md));
}

Estimate raw_moment(std::span<const double> values, unsigned order) {
  if (values.size() < 2) throw std::invalid_argument("need at least two samples");
  const double n = static_cast<double>(values.size());
  double s = 0.0;
  for (double v : values) s += std::pow(v, order);
  const double m = s / n;
  double ss = 0.0;
  for (double v : values) {
    const double dv = std::pow(v, order) - m;
    ss += dv * dv;
  }
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

Estimate mean_estimate(std::span<const double> values) { return raw_moment(values, 1); }

double moment_z(std::span<const double> samples, double predicted, unsigned order) {
  if (samples.size() < 30) throw std::invalid_argument("moment_z needs at least 30 samples");
  const auto est = raw_moment(samples, order);
  if (est.se == 0.0) {
    if (est.value == predicted) return 0.0;
    throw std::domain_error("moment_z: zero sample variance");
  }
  return (est.value - predicted) / est.se;
}

ChiSquareResult chi_square_gof(const Histogram& observed,
                               const std::function<double(std::uint64_t)>& pmf,
                               double min_expected) {
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  if (!(n > 0.0)) throw std::invalid_argument("chi_square_gof needs observations");
  // Pool cells left to right until each expected count reaches the minimum;
  // the last cell absorbs the upper tail.
  std::vector<double> obs_cells, exp_cells;
  double o = 0.0, e = 0.0, mass = 0.0;
  for (std::uint64_t k = 0; k < observed.size(); ++k) {
    const double p = pmf(k);
    o += observed[k];
    e += n * p;
    mass += p;
    if (e >= min_expected) {
      obs_cells.push_back(o);
      exp_cells.push_back(e);
      o = e = 0.0;
    }
  }
  const double tail = std::max(0.0, 1.0 - mass) * n;
  o += 0.0;
  e += tail;
  if (!obs_cells.empty() && e < min_expected) {
    obs_cells.back() += o;
    exp_cells.back() += e;
  } else if (e > 0.0 || o > 0.0) {
    obs_cells.push_back(o);
    exp_cells.push_back(e);
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < obs_cells.size(); ++i) {
    const double d = obs_cells[i] - exp_cells[i];
    stat += d * d / exp_cells[i];
  }
  const double dof = static_cast<double>(obs_cells.size()) - 1.0;
  if (dof < 1.0) return {stat, dof, 1.0};
  boost::math::chi_squared dist(dof);
  return {stat, dof, boost::math::cdf(boost::math::complement(dist, stat))};
}

Interval bootstrap_mean_ci(std::span<const double> values, std::size_t resamples, double level,
                           Stream& rng) {
  if (values.empty() || resamples == 0) {
    throw std::invalid_argument("bootstrap needs values and resamples");
  }
  const std::size_t n = values.size();
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += values[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))];
    }
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - level);
  auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1)));
    return means[std::min(idx, resamples - 1)];
  };
  return {at(alpha), at(1.0 - alpha)};
}

}  // namespace smq

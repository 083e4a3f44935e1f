#include <gtest/gtest.h>

#include <cmath>

#include "smq/error.hpp"
#include "smq/sojourn.hpp"
#include "smq/stats.hpp"

using namespace smq;

namespace {

std::vector<double> draws(const SojournDist& d, std::size_t n, std::uint64_t seed, bool equilibrium) {
  Stream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = equilibrium ? d.equilibrium_sample(rng) : d.sample(rng);
  return v;
}

double pareto_cdf(double x, double shape) { return 1.0 - std::pow(1.0 + x, -shape); }

}  // namespace

TEST(Sojourn, ExponentialMeanAndTail) {
  const auto d = SojournDist::exponential(2.5);
  EXPECT_DOUBLE_EQ(d.mean(), 0.4);
  EXPECT_NEAR(d.tail_integral(0.0), 0.4, 1e-15);
  EXPECT_NEAR(d.tail_integral(1.3), std::exp(-2.5 * 1.3) / 2.5, 1e-15);
}

TEST(Sojourn, ExponentialSamplesFitCdf) {
  const auto v = draws(SojournDist::exponential(3.0), 100000, 1, false);
  EXPECT_LT(ks_stat(v, [](double x) { return 1.0 - std::exp(-3.0 * x); }), ks_critical_1pct(v.size()));
}

TEST(Sojourn, ParetoMeanAndTail) {
  const auto d = SojournDist::shifted_pareto(2.2);
  EXPECT_NEAR(d.mean(), 1.0 / 1.2, 1e-15);
  // integral_x^inf (1 + y)^{-a} dy = (1 + x)^{1-a} / (a - 1)
  EXPECT_NEAR(d.tail_integral(2.0), std::pow(3.0, -1.2) / 1.2, 1e-14);
}

TEST(Sojourn, ParetoSamplesFitCdf) {
  const auto v = draws(SojournDist::shifted_pareto(2.2), 100000, 2, false);
  EXPECT_LT(ks_stat(v, [](double x) { return pareto_cdf(x, 2.2); }), ks_critical_1pct(v.size()));
}

TEST(Sojourn, InfiniteMeanRejected) {
  EXPECT_THROW(SojournDist::shifted_pareto(1.0), InfiniteMeanError);
  EXPECT_THROW(SojournDist::shifted_pareto(0.5), InfiniteMeanError);
  EXPECT_THROW(SojournDist::exponential(0.0), std::invalid_argument);
}

TEST(Sojourn, EquilibriumOfExponentialIsExponential) {
  const auto v = draws(SojournDist::exponential(1.7), 100000, 3, true);
  EXPECT_LT(ks_stat(v, [](double x) { return 1.0 - std::exp(-1.7 * x); }), ks_critical_1pct(v.size()));
}

TEST(Sojourn, EquilibriumOfParetoLowersShape) {
  const auto v = draws(SojournDist::shifted_pareto(2.2), 100000, 4, true);
  EXPECT_LT(ks_stat(v, [](double x) { return pareto_cdf(x, 1.2); }), ks_critical_1pct(v.size()));
}

TEST(Sojourn, CustomUniformEquilibrium) {
  // Uniform(0, 2): mean 1, tail integral (2 - x)^2 / 4, equilibrium cdf 1 - (2 - x)^2 / 4.
  const auto d = SojournDist::custom([](Stream& r) { return 2.0 * r.uniform(); }, 1.0,
                                     [](double x) { return x >= 2.0 ? 0.0 : (2.0 - x) * (2.0 - x) / 4.0; });
  const auto v = draws(d, 20000, 5, true);
  EXPECT_LT(ks_stat(v, [](double x) { return x >= 2.0 ? 1.0 : 1.0 - (2.0 - x) * (2.0 - x) / 4.0; }),
            ks_critical_1pct(v.size()));
}

TEST(Sojourn, CustomWithoutTailIsUnsupported) {
  const auto d = SojournDist::custom([](Stream& r) { return r.exponential(1.0); }, 1.0);
  Stream rng(1);
  EXPECT_THROW(d.tail_integral(0.5), UnsupportedOperation);
  EXPECT_THROW(d.equilibrium_sample(rng), UnsupportedOperation);
  EXPECT_NO_THROW(d.sample(rng));
}

TEST(Sojourn, CustomFromSurvivalUsesQuadrature) {
  const auto d = SojournDist::custom_from_survival([](Stream& r) { return r.exponential(2.0); },
                                                   [](double x) { return std::exp(-2.0 * x); });
  EXPECT_NEAR(d.mean(), 0.5, 1e-9);
  EXPECT_NEAR(d.tail_integral(1.0), std::exp(-2.0) / 2.0, 1e-9);
}

TEST(Sojourn, JsonRoundTrip) {
  for (const auto& d : {SojournDist::exponential(3.0), SojournDist::shifted_pareto(2.5)}) {
    const auto back = SojournDist::from_json(d.to_json());
    EXPECT_EQ(back.to_json(), d.to_json());
    EXPECT_DOUBLE_EQ(back.mean(), d.mean());
  }
  EXPECT_THROW(SojournDist::from_json({{"kind", "weibull"}}), std::invalid_argument);
}

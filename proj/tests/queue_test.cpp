#include <gtest/gtest.h>

#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <sstream>

#include "smq/discrete.hpp"
#include "smq/models.hpp"
#include "smq/queue.hpp"
#include "smq/stats.hpp"
#include "test_util.hpp"

using namespace smq;

namespace {

Histogram poisson_hist(double mean, std::uint64_t kmax) {
  return test::pmf_histogram([&](std::uint64_t k) { return poisson_pmf(k, mean); }, kmax);
}

// Two states whose first sojourn practically never ends before t = 10.
ModelPreset sticky(double lam0, double mu0) {
  auto p = intro_ctmc(1e-12, 1.0);
  p.rates = RateMap({lam0, 1.0}, {mu0, 1.0});
  return p;
}

}  // namespace

TEST(GFunction, Branches) {
  EXPECT_DOUBLE_EQ(g_function(0.0, 2.0, 3.0), 6.0);
  EXPECT_NEAR(g_function(2.0, 3.0, 1.5), 1.5 * (1.0 - std::exp(-3.0)), 1e-15);
  EXPECT_EQ(g_function(1.0, 0.0, 5.0), 0.0);
  // Continuity at c -> 0.
  EXPECT_NEAR(g_function(1e-14, 2.0, 3.0), 6.0, 1e-9);
}

TEST(IntervalUpdate, NoEvents) {
  Stream rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(interval_update(5, 0.0, 0.0, 3.0, rng), 5u);
}

TEST(IntervalUpdate, EmptyStartIsPoisson) {
  Stream rng(2);
  std::vector<std::uint64_t> v(100000);
  for (auto& x : v) x = interval_update(0, 3.0, 0.7, 2.0, rng);
  EXPECT_LT(pmf_tv(count_histogram(v), poisson_hist(g_function(0.7, 3.0, 2.0), 60)), 0.01);
}

TEST(IntervalUpdate, MatchesEventDrivenSegment) {
  const auto m = sticky(2.0, 0.5);
  std::vector<std::uint64_t> a(100000), b(100000);
  Stream r1(3), r2(4);
  for (auto& x : a) x = interval_update(5, 2.0, 0.5, 3.0, r1);
  for (auto& x : b) x = simulate_gillespie(m.model, m.rates, 5, 3.0, r2, {.record_jumps = false}).terminal();
  EXPECT_LT(pmf_tv(count_histogram(a), count_histogram(b)), 0.02);
}

TEST(Conditional, OneSegmentEqualsIntervalUpdate) {
  Trajectory t({{0, 1.7}});
  const RateMap rates({2.0, 1.0}, {0.4, 1.0});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Stream a(seed), b(seed);
    EXPECT_EQ(simulate_conditional(t, rates, 7, a).terminal(), interval_update(7, 2.0, 0.4, 1.7, b));
  }
}

TEST(Conditional, RecordsEveryBoundary) {
  Stream rng(5);
  const auto m = example1();
  const auto t = sample_trajectory(m.model, 3.0, rng);
  const auto path = simulate_conditional(t, m.rates, 0, rng);
  ASSERT_EQ(path.times.size(), t.size() + 1);
  EXPECT_EQ(path.times.front(), 0.0);
  EXPECT_NEAR(path.times.back(), 3.0, 1e-12);
  EXPECT_EQ(path.environment->size(), t.size());
}

TEST(Conditional, ConstantRatesConvergeToPoisson) {
  const auto m = example1();
  const auto rates = RateMap::constant(11, 1.0, 1.0);
  std::vector<std::uint64_t> v(20000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    Stream rng(6, i);
    v[i] = simulate_conditional(sample_trajectory(m.model, 20.0, rng), rates, 0, rng).terminal();
  }
  EXPECT_LT(pmf_tv(count_histogram(v), poisson_hist(1.0, 30)), 0.02);
  const auto d = test::to_double(v);
  EXPECT_LT(std::fabs(moment_z(d, 1.0, 1)), 3.0);
}

TEST(Conditional, ConstantRatesMeanAndVariance) {
  // Horizon 20 / mu with lambda / mu = 4.
  const auto m = example1();
  const auto rates = RateMap::constant(11, 2.0, 0.5);
  std::vector<double> v(20000), sq(20000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    Stream rng(7, i);
    v[i] = static_cast<double>(conditional_terminal(m.model, rates, 0, 40.0, rng));
    sq[i] = (v[i] - 4.0) * (v[i] - 4.0);
  }
  EXPECT_LT(std::fabs(moment_z(v, 4.0, 1)), 3.0);
  EXPECT_LT(std::fabs(moment_z(sq, 4.0, 1)), 3.0);
}

TEST(Conditional, TerminalFastPathSameLaw) {
  const auto m = example1();
  std::vector<std::uint64_t> a(20000), b(20000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    Stream r1(8, i), r2(9, i);
    a[i] = simulate_conditional(sample_trajectory(m.model, 5.0, r1), m.rates, 3, r1).terminal();
    b[i] = conditional_terminal(m.model, m.rates, 3, 5.0, r2);
  }
  EXPECT_LT(ks_two_sample(test::to_double(a), test::to_double(b)), ks_critical_1pct(a.size(), b.size()));
}

TEST(Conditional, IntroExampleLevelsOffNearThousand) {
  // The count at each return of the environment to state 0 settles near
  // 1000; the time average is about twice that because Y keeps growing
  // linearly through every long sojourn in state 0.
  const auto m = intro_ctmc();
  std::vector<double> entry_levels;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    Stream rng(10, rep);
    const auto traj = sample_trajectory(m.model, 10000.0, rng);
    const auto path = simulate_conditional(traj, m.rates, 0, rng);
    const auto& segs = traj.segments();
    for (std::size_t i = 1; i < segs.size(); ++i) {
      if (segs[i].state == 0 && path.times[i] >= 5000.0) {
        entry_levels.push_back(static_cast<double>(path.counts[i]));
      }
    }
  }
  ASSERT_GT(entry_levels.size(), 200u);
  const auto est = mean_estimate(entry_levels);
  EXPECT_GE(est.value, 800.0);
  EXPECT_LE(est.value, 1200.0);
}

TEST(Gillespie, ZeroRatesFlat) {
  const auto m = example1();
  Stream rng(11);
  const auto path = simulate_gillespie(m.model, RateMap::constant(11, 0.0, 0.0), 4, 10.0, rng);
  for (auto c : path.counts) EXPECT_EQ(c, 4u);
  EXPECT_EQ(path.times.back(), 10.0);
}

TEST(Gillespie, ConstantEnvironmentPoissonTwo) {
  const auto m = example1();
  const auto rates = RateMap::constant(11, 2.0, 1.0);
  Histogram h;
  std::vector<std::uint64_t> v(20000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    Stream rng(12, i);
    v[i] = simulate_gillespie(m.model, rates, 0, 50.0, rng, {.record_jumps = false}).terminal();
  }
  const auto chi = chi_square_gof(count_histogram(v), [](std::uint64_t k) { return poisson_pmf(k, 2.0); });
  EXPECT_GT(chi.p_value, 0.01);
}

TEST(Gillespie, AgreesWithConditional) {
  const auto m = example1();
  std::vector<std::uint64_t> a(30000), b(30000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    Stream r1(13, i), r2(14, i);
    a[i] = conditional_terminal(m.model, m.rates, 0, 5.0, r1);
    b[i] = simulate_gillespie(m.model, m.rates, 0, 5.0, r2, {.record_jumps = false}).terminal();
  }
  EXPECT_LT(pmf_tv(count_histogram(a), count_histogram(b)), 0.02);
}

TEST(Gillespie, JumpsAreUnitAndCapEnforced) {
  const auto m = example1();
  Stream rng(15);
  const auto path = simulate_gillespie(m.model, m.rates, 0, 5.0, rng);
  for (std::size_t i = 1; i + 1 < path.counts.size(); ++i) {
    const auto d = static_cast<long long>(path.counts[i]) - static_cast<long long>(path.counts[i - 1]);
    EXPECT_TRUE(d == 1 || d == -1 || d == 0);
    EXPECT_GE(path.times[i], path.times[i - 1]);
  }
  Stream rng2(16);
  EXPECT_THROW(simulate_gillespie(m.model, m.rates, 0, 1000.0, rng2, {.max_events = 100}), ExplosionError);
}

TEST(PhiAndI, NoServiceAccumulatesArrivals) {
  Trajectory t({{0, 1.0}, {1, 2.0}, {0, 0.5}});
  const auto r = phi_and_i(t, RateMap({1.0, 3.0}, {0.0, 0.0}));
  EXPECT_EQ(r.phi, 1.0);
  EXPECT_NEAR(r.i_integral, 1.0 + 6.0 + 0.5, 1e-15);
}

TEST(PhiAndI, SingleSegment) {
  Trajectory t({{1, 2.5}});
  const RateMap rates({1.0, 3.0}, {0.5, 1.2});
  const auto r = phi_and_i(t, rates);
  EXPECT_NEAR(r.phi, std::exp(-1.2 * 2.5), 1e-15);
  EXPECT_NEAR(r.i_integral, g_function(1.2, 3.0, 2.5), 1e-15);
}

TEST(PhiAndI, MatchesQuadrature) {
  Stream rng(17);
  const auto m = example1();
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Segment> segs;
    StateIndex s = 3;
    for (int i = 0; i < 10; ++i) {
      segs.push_back({s, 0.05 + 0.3 * rng.uniform()});
      s = m.model.sample_transition(s, rng).to;
    }
    const Trajectory t(segs);
    std::vector<double> starts;
    double acc = 0.0;
    for (const auto& seg : segs) {
      starts.push_back(acc);
      acc += seg.length;
    }
    auto state_at = [&](double x) {
      std::size_t i = segs.size() - 1;
      while (i > 0 && starts[i] > x) --i;
      return segs[i].state;
    };
    // M(x) = integral of mu over [x, total], exact within segments.
    auto mass_after = [&](double x) {
      double mass = 0.0;
      for (std::size_t i = 0; i < segs.size(); ++i) {
        const double lo = std::max(x, starts[i]), hi = starts[i] + segs[i].length;
        if (hi > lo) mass += m.rates.mu[segs[i].state] * (hi - lo);
      }
      return mass;
    };
    double quad = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      quad += test::simpson(
          [&](double x) { return m.rates.lambda[state_at(x)] * std::exp(-mass_after(x)); },
          starts[i], starts[i] + segs[i].length, 1e-14);
    }
    const auto r = phi_and_i(t, m.rates);
    EXPECT_NEAR(r.i_integral, quad, 1e-10);
    EXPECT_NEAR(r.phi, std::exp(-mass_after(0.0)), 1e-13);
  }
}

TEST(GrowthRate, ConstantAndLinear) {
  const std::vector<double> t = {0, 1, 2, 3, 4, 5, 6};
  EXPECT_NEAR(growth_rate(t, std::vector<double>(7, 4.0)), 0.0, 1e-15);
  std::vector<double> lin;
  for (double x : t) lin.push_back(3.0 * x + 1.0);
  EXPECT_NEAR(growth_rate(t, lin), 3.0, 1e-12);
  EXPECT_THROW(growth_rate(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(growth_rate(std::vector<double>{2.0, 2.0}, std::vector<double>{1.0, 3.0}), std::invalid_argument);
}

TEST(QueuePath, CsvSchema) {
  QueuePath p;
  p.times = {0.0, 1.5};
  p.counts = {0, 2};
  std::ostringstream os;
  p.write_csv(os);
  EXPECT_EQ(os.str(), "time,count\n0,0\n1.5,2\n");
}

TEST(RateMap, Validation) {
  EXPECT_THROW(RateMap({1.0}, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(RateMap({-1.0}, {1.0}), std::invalid_argument);
  const RateMap r({1.0, 3.0}, {0.0, 2.0});
  EXPECT_NEAR(r.mean_arrival(std::vector<double>{0.25, 0.75}), 2.5, 1e-15);
  EXPECT_THROW(RateMap({1.0, 1.0}, {0.0, 0.0}).require_positive_service(std::vector<double>{0.5, 0.5}),
               InvalidRateError);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smq/discrete.hpp"
#include "smq/limit_law.hpp"
#include "smq/models.hpp"
#include "smq/stats.hpp"
#include "test_util.hpp"

using namespace smq;

namespace {

double falling(double x, unsigned k) {
  double r = 1.0;
  for (unsigned i = 0; i < k; ++i) r *= x - i;
  return r;
}

ModelPreset with_rates(ModelPreset p, RateMap rates) {
  p.rates = std::move(rates);
  return p;
}

const LimitLawSampler& example1_sampler() {
  static const LimitLawSampler s = [] {
    auto p = example1();
    return LimitLawSampler(p.model, p.rates);
  }();
  return s;
}

}  // namespace

TEST(Stirling, SmallValues) {
  EXPECT_EQ(stirling2(0, 0), 1u);
  EXPECT_EQ(stirling2(5, 0), 0u);
  for (unsigned n = 1; n <= 20; ++n) {
    EXPECT_EQ(stirling2(n, 1), 1u);
    EXPECT_EQ(stirling2(n, n), 1u);
  }
  EXPECT_EQ(stirling2(3, 2), 3u);
  EXPECT_EQ(stirling2(10, 4), 34105u);
}

TEST(Stirling, FallingFactorialIdentity) {
  for (unsigned n = 0; n <= 8; ++n) {
    for (int x = 1; x <= 5; ++x) {
      std::uint64_t s = 0;
      for (unsigned k = 0; k <= n; ++k) {
        s += stirling2(n, k) * static_cast<std::uint64_t>(falling(x, k));
      }
      EXPECT_EQ(s, static_cast<std::uint64_t>(std::llround(std::pow(x, n))));
    }
  }
}

TEST(Stirling, Guards) {
  EXPECT_THROW(stirling2(3, 4), std::out_of_range);
  EXPECT_THROW(stirling2(65, 1), std::out_of_range);
  EXPECT_THROW(stirling2(64, 32), std::overflow_error);
  EXPECT_EQ(stirling2(64, 63), 64u * 63u / 2u);
}

TEST(Sampler, Invariants) {
  const auto& s = example1_sampler();
  EXPECT_NEAR(std::accumulate(s.pi().begin(), s.pi().end(), 0.0), 1.0, 1e-12);
  for (StateIndex j = 0; j < 11; ++j) {
    EXPECT_GT(s.pi()[j], 0.0);
    EXPECT_GE(s.depth(j), 1u);
  }
  const auto j = s.diagnostics_json();
  EXPECT_EQ(j["states"].size(), 11u);
}

TEST(Sampler, RejectsNoService) {
  auto p = example1();
  EXPECT_THROW(LimitLawSampler(p.model, RateMap::constant(11, 1.0, 0.0)), InvalidRateError);
}

TEST(SampleW, ConstantRatesAreExact) {
  for (auto preset : {example1(), example2_exp(), example2_pareto(), intro_ctmc()}) {
    const auto k = preset.model.size();
    LimitLawSampler s(preset.model, RateMap::constant(k, 2.0, 1.0));
    Stream rng(1);
    for (int i = 0; i < 2000; ++i) {
      const StateIndex j = s.sample_state(rng);
      ASSERT_NEAR(s.sample_w(j, rng), 2.0, 1e-12);
    }
  }
}

TEST(SampleW, NoArrivalsGivesZero) {
  auto p = example1();
  LimitLawSampler s(p.model, RateMap::constant(11, 0.0, 1.0));
  Stream rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto d = sample_limit_pair(s, rng);
    EXPECT_EQ(d.w, 0.0);
    EXPECT_EQ(d.count, 0u);
  }
}

TEST(SampleW, ParetoStateZeroHeavyTail) {
  const auto p = example2_pareto();
  LimitLawSampler s(p.model, p.rates);
  std::vector<double> w(10000);
  for (std::size_t i = 0; i < w.size(); ++i) {
    Stream rng(3, i);
    w[i] = s.sample_w(0, rng);
  }
  std::sort(w.begin(), w.end());
  const double p99 = w[static_cast<std::size_t>(0.99 * w.size())];
  EXPECT_GT(w.back(), 5.0 * p99);
  // State 3 is bounded by lambda / mu plus the recursion's V.
  std::vector<double> w3(2000);
  for (std::size_t i = 0; i < w3.size(); ++i) {
    Stream rng(4, i);
    w3[i] = s.sample_w(3, rng);
  }
  EXPECT_LT(*std::max_element(w3.begin(), w3.end()), w.back());
}

TEST(SampleLimitPair, ConstantRatesPoisson) {
  auto p = example1();
  LimitLawSampler s(p.model, RateMap::constant(11, 2.0, 1.0));
  const auto draws = sample_limit_pairs(s, 20000, 5);
  std::vector<std::uint64_t> counts;
  for (const auto& d : draws) counts.push_back(d.count);
  const auto chi = chi_square_gof(count_histogram(counts), [](std::uint64_t k) { return poisson_pmf(k, 2.0); });
  EXPECT_GT(chi.p_value, 0.01);
}

TEST(SampleLimitPair, MatchesLongHorizonSimulation) {
  const auto& s = example1_sampler();
  const auto draws = sample_limit_pairs(s, 20000, 6);
  std::vector<std::uint64_t> mix, sim(20000);
  for (const auto& d : draws) mix.push_back(d.count);
  const auto p = example1();
  for (std::size_t i = 0; i < sim.size(); ++i) {
    Stream rng(7, i);
    sim[i] = conditional_terminal(p.model, p.rates, 0, 100.0, rng);
  }
  EXPECT_LT(pmf_tv(count_histogram(mix), count_histogram(sim)), 0.05);
}

TEST(SampleLimitPair, StateFrequenciesFollowPi) {
  const auto& s = example1_sampler();
  Stream rng(8);
  std::vector<std::uint64_t> states(20000);
  for (auto& x : states) x = s.sample_state(rng);
  const auto chi = chi_square_gof(count_histogram(states), [&](std::uint64_t j) { return j < 11 ? s.pi()[j] : 0.0; });
  EXPECT_GT(chi.p_value, 0.001);
}

TEST(SampleLimitPair, ThreadCountDoesNotChangeDraws) {
  const auto& s = example1_sampler();
  const auto a = sample_limit_pairs(s, 500, 9, 1);
  const auto b = sample_limit_pairs(s, 500, 9, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].count, b[i].count);
    EXPECT_EQ(a[i].state, b[i].state);
    EXPECT_EQ(a[i].w, b[i].w);
  }
}

TEST(SreMoments, ConstantRatePairsGiveRatio) {
  const auto p = example1();
  Stream rng(10);
  const auto pairs = sample_cycles(p.model, RateMap::constant(11, 3.0, 2.0), 5, 5000, rng);
  const auto m = sre_moments(pairs, 3);
  EXPECT_EQ(m.value[0], 1.0);
  EXPECT_NEAR(m.value[1], 1.5, 1e-9);
  EXPECT_NEAR(m.value[2], 2.25, 1e-8);
  EXPECT_NEAR(m.value[3], 3.375, 1e-8);
}

TEST(SreMoments, AnalyticDeterministicPairs) {
  JointMoments jm;
  jm.l_max = 2;
  jm.value = {{1.0}, {1.0, 0.5}, {1.0, 0.5, 0.25}};
  jm.se = {{0.0}, {0.0, 0.0}, {0.0, 0.0, 0.0}};
  const auto m = sre_moments(jm);
  EXPECT_DOUBLE_EQ(m.value[1], 2.0);
  EXPECT_DOUBLE_EQ(m.value[2], 4.0);
}

TEST(SreMoments, MomentConditionFailureNamesOrder) {
  const std::vector<CyclePair> pairs = {{1.0, 1.0}, {0.99, 1.0}, {1.0, 2.0}};
  try {
    sre_moments(pairs, 2);
    FAIL() << "expected a moment-condition failure";
  } catch (const MomentConditionError& e) {
    EXPECT_EQ(e.order(), 1u);
  }
}

TEST(SreMoments, DeltaMethodSeMatchesReplication) {
  const auto p = example1();
  std::vector<double> est, ses;
  for (std::uint64_t r = 0; r < 40; ++r) {
    Stream rng(11, r);
    const auto m = sre_moments(sample_cycles(p.model, p.rates, 2, 2000, rng), 2);
    est.push_back(m.value[2]);
    ses.push_back(m.se[2]);
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
  double ss = 0.0;
  for (double x : est) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (est.size() - 1));
  const double mean_se = std::accumulate(ses.begin(), ses.end(), 0.0) / ses.size();
  EXPECT_GT(mean_se, 0.6 * sd);
  EXPECT_LT(mean_se, 1.6 * sd);
}

TEST(SreMoments, Example1AgreesWithMonteCarlo) {
  const auto p = example1();
  Stream rng(12);
  const auto m = sre_moments(sample_cycles(p.model, p.rates, 2, 50000, rng), 2);
  std::vector<double> v(20000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    Stream r(13, i);
    v[i] = forward_recursion(sample_cycles(p.model, p.rates, 2, 30, r));
  }
  const auto m1 = raw_moment(v, 1), m2 = raw_moment(v, 2);
  EXPECT_LT(std::fabs(m.value[1] - m1.value), 3.0 * std::hypot(m.se[1], m1.se));
  EXPECT_LT(std::fabs(m.value[2] - m2.value), 3.0 * std::hypot(m.se[2], m2.se));
}

TEST(LimitMoment, ConstantRates) {
  const auto p = example1();
  LimitLawSampler s(p.model, RateMap::constant(11, 2.0, 1.0));
  const auto table = build_moment_table(s, 2, 2000, 500, 14);
  EXPECT_NEAR(table.mixture[0], 2.0, 1e-9);
  // E Y^2 = w + w^2 for Poisson(w).
  EXPECT_NEAR(table.mixture[1], 6.0, 1e-8);
}

TEST(LimitMoment, NoArrivals) {
  const auto p = example1();
  LimitLawSampler s(p.model, RateMap::constant(11, 0.0, 1.0));
  const auto table = build_moment_table(s, 3, 200, 100, 15);
  for (double x : table.mixture) EXPECT_EQ(x, 0.0);
}

TEST(LimitMoment, TableInvariants) {
  const auto& s = example1_sampler();
  const auto table = build_moment_table(s, 2, 5000, 1000, 16);
  ASSERT_EQ(table.states.size(), 11u);
  for (const auto& m : table.per_state) {
    EXPECT_EQ(m.value[0], 1.0);
    EXPECT_GE(m.value[1], 0.0);
    EXPECT_GE(m.value[2], m.value[1] * m.value[1]);
  }
  EXPECT_THROW({
    Stream rng(1);
    limit_moment(s, table, 3, 10, rng);
  }, std::invalid_argument);
}

TEST(LimitMoment, Example1MatchesMixtureSamples) {
  const auto& s = example1_sampler();
  const auto table = build_moment_table(s, 2, 20000, 20000, 17);
  const auto draws = sample_limit_pairs(s, 40000, 18);
  std::vector<double> y;
  for (const auto& d : draws) y.push_back(static_cast<double>(d.count));
  EXPECT_LT(std::fabs(moment_z(y, table.mixture[0], 1)), 3.0);
  EXPECT_LT(std::fabs(moment_z(y, table.mixture[1], 2)), 3.0);
}

TEST(PoissonFactorialMoments, MatchPowers) {
  for (double w : {0.5, 1.0, 2.0}) {
    Stream rng(19);
    std::vector<double> y(100000);
    for (auto& x : y) x = static_cast<double>(sample_poisson(w, rng));
    for (unsigned k = 1; k <= 4; ++k) {
      std::vector<double> f(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) f[i] = falling(y[i], k);
      EXPECT_LT(std::fabs(moment_z(f, std::pow(w, k), 1)), 3.5) << "w=" << w << " k=" << k;
    }
  }
}

TEST(Exceedance, ZeroThresholdIsOne) {
  const auto& s = example1_sampler();
  Stream rng(20);
  const auto e = exceedance(s, 0, 10, rng);
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(e.se, 0.0);
}

TEST(Exceedance, ConstantRateAnalytic) {
  const auto p = example1();
  LimitLawSampler s(p.model, RateMap::constant(11, 1.0, 1.0));
  const auto e = exceedance(s, 3, 1000, 21, 2);
  EXPECT_NEAR(e.value, 1.0 - 2.5 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(e.value, 0.080301, 5e-7);
}

TEST(Exceedance, MonotoneAndConsistentWithDraws) {
  const auto& s = example1_sampler();
  const auto draws = sample_limit_pairs(s, 40000, 22);
  std::vector<double> w;
  for (const auto& d : draws) w.push_back(d.w);
  double prev = 1.0;
  for (std::uint64_t c = 0; c <= 8; ++c) {
    const auto e = exceedance(w, c);
    EXPECT_LE(e.value, prev);
    prev = e.value;
  }
  std::vector<double> hit;
  for (const auto& d : draws) hit.push_back(d.count >= 4 ? 1.0 : 0.0);
  const auto freq = mean_estimate(hit);
  const auto est = exceedance(s, 4, 40000, 23, 1);
  EXPECT_LT(std::fabs(est.value - freq.value), 3.0 * std::hypot(est.se, freq.se));
}

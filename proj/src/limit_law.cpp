#include "smq/limit_law.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "smq/discrete.hpp"
#include "smq/parallel.hpp"

namespace smq {

LimitLawSampler::LimitLawSampler(SemiMarkovModel model, RateMap rates, SamplerOptions options)
    : model_(std::move(model)), rates_(std::move(rates)), options_(options) {
  require_valid(model_);
  if (rates_.size() != model_.size()) {
    throw std::invalid_argument("rate map has " + std::to_string(rates_.size()) +
                                " states, model has " + std::to_string(model_.size()));
  }
  if (!(options_.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (options_.depth && *options_.depth == 0) throw std::invalid_argument("depth must be >= 1");
  const auto full_pi = stationary_time(model_);
  rates_.require_positive_service(full_pi);
  e_pi_lambda_ = rates_.mean_arrival(full_pi);

  pi_ = full_pi;
  for (auto& p : pi_) {
    if (p < options_.min_state_mass) p = 0.0;
  }
  const double total = std::accumulate(pi_.begin(), pi_.end(), 0.0);
  pi_cumulative_.resize(pi_.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < pi_.size(); ++j) {
    pi_[j] /= total;
    acc += pi_[j];
    pi_cumulative_[j] = acc;
  }
  once_ = std::make_unique<std::once_flag[]>(model_.size());
  setups_.resize(model_.size());
}

const StateSetup& LimitLawSampler::setup(StateIndex j) const {
  if (j >= model_.size()) throw std::out_of_range("state index out of range");
  std::call_once(once_[j], [&] {
    StateSetup s;
    const auto emb = stationary_embedded(model_);
    const double expected_segments = 1.0 / std::max(emb[j], 1e-300);
    const double affordable = options_.pilot_segment_budget / expected_segments;
    const auto pilot_n = static_cast<std::size_t>(std::clamp(
        std::floor(affordable), static_cast<double>(options_.min_pilot_cycles),
        static_cast<double>(std::max(options_.pilot_cycles, options_.min_pilot_cycles))));
    Stream rng(options_.pilot_seed, j);
    s.pilot = sample_cycles(model_, rates_, j, pilot_n, rng, options_.max_cycle_segments);
    s.diagnostics = estimate_constants(s.pilot, e_pi_lambda_, mean_cycle_length(model_, j));
    if (options_.warm_start) {
      s.v0 = s.diagnostics.mean_d / (1.0 - s.diagnostics.mean_c);
    }
    if (options_.depth) {
      s.depth = *options_.depth;
    } else {
      SreDiagnostics shifted = s.diagnostics;
      shifted.a1 += s.v0;
      s.depth = choose_n(shifted, options_.epsilon);
    }
    setups_[j] = std::move(s);
  });
  return setups_[j];
}

StateIndex LimitLawSampler::sample_state(Stream& rng) const {
  const double u = rng.uniform();
  const auto it = std::lower_bound(pi_cumulative_.begin(), pi_cumulative_.end(), u);
  auto j = static_cast<StateIndex>(it - pi_cumulative_.begin());
  if (j >= pi_.size()) j = pi_.size() - 1;
  while (pi_[j] == 0.0 && j > 0) --j;
  return j;
}

double LimitLawSampler::sample_v(StateIndex j, std::size_t n, double v0, Stream& rng) const {
  double v = v0;
  if (options_.bootstrap_pairs) {
    const auto& pool = setup(j).pilot;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = pool[static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size()))];
      v = p.c * v + p.d;
    }
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = sample_cycle_pair(model_, rates_, j, rng, options_.max_cycle_segments);
    v = p.c * v + p.d;
  }
  return v;
}

double LimitLawSampler::sample_v(StateIndex j, Stream& rng) const {
  const auto& s = setup(j);
  return sample_v(j, s.depth, s.v0, rng);
}

double LimitLawSampler::sample_w(StateIndex j, Stream& rng) const {
  const double t = residual_sampler(model_, j, rng);
  const double v = sample_v(j, rng);
  const double mu = rates_.mu[j];
  return g_function(mu, rates_.lambda[j], t) + std::exp(-mu * t) * v;
}

nlohmann::json LimitLawSampler::diagnostics_json() const {
  nlohmann::json states = nlohmann::json::array();
  for (StateIndex j = 0; j < model_.size(); ++j) {
    nlohmann::json entry = {{"state", model_.names()[j]}, {"pi", pi_[j]}};
    if (pi_[j] > 0.0) {
      const auto& s = setup(j);
      entry["depth"] = s.depth;
      entry["v0"] = s.v0;
      entry["sre"] = s.diagnostics.to_json();
    }
    states.push_back(std::move(entry));
  }
  return {{"e_pi_lambda", e_pi_lambda_}, {"epsilon", options_.epsilon}, {"states", states}};
}

double sample_W(const LimitLawSampler& sampler, StateIndex j, Stream& rng) {
  return sampler.sample_w(j, rng);
}

LimitDraw sample_limit_pair(const LimitLawSampler& sampler, Stream& rng) {
  const StateIndex j = sampler.sample_state(rng);
  const double w = sampler.sample_w(j, rng);
  return {sample_poisson(w, rng), j, w};
}

std::vector<LimitDraw> sample_limit_pairs(const LimitLawSampler& sampler, std::size_t n,
                                          std::uint64_t seed, unsigned threads) {
  std::vector<LimitDraw> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Stream rng(seed, i);
    out[i] = sample_limit_pair(sampler, rng);
  });
  return out;
}

std::uint64_t stirling2(unsigned n, unsigned k) {
  if (n > 64 || k > n) {
    throw std::out_of_range("stirling2 needs k <= n <= 64, got n=" + std::to_string(n) +
                            " k=" + std::to_string(k));
  }
  // Row-by-row recurrence restricted to the entries S(n, k) depends on, so
  // that only a genuinely large result trips the overflow check.
  std::vector<std::uint64_t> row(k + 1, 0);
  row[0] = 1;
  for (unsigned m = 1; m <= n; ++m) {
    const unsigned lowest = k > n - m ? std::max(1u, k - (n - m)) : 1u;
    for (unsigned i = std::min(m, k); i >= lowest; --i) {
      std::uint64_t scaled = 0;
      if (__builtin_mul_overflow(static_cast<std::uint64_t>(i), row[i], &scaled) ||
          __builtin_add_overflow(scaled, row[i - 1], &row[i])) {
        throw std::overflow_error("stirling2(" + std::to_string(n) + ", " + std::to_string(k) +
                                  ") exceeds 64 bits");
      }
    }
    row[0] = 0;
  }
  return row[k];
}

namespace {

double binom(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Flattened (l, k) index for 1 <= l <= l_max, 0 <= k <= l.
std::size_t feature_index(std::size_t l, std::size_t k) { return (l * (l + 1)) / 2 - 1 + k; }

std::size_t feature_count(std::size_t l_max) { return feature_index(l_max, l_max) + 1; }

std::vector<double> recursion(const std::vector<double>& f, std::size_t l_max) {
  std::vector<double> m(l_max + 1, 0.0);
  m[0] = 1.0;
  for (std::size_t l = 1; l <= l_max; ++l) {
    double s = 0.0;
    for (std::size_t k = 0; k < l; ++k) s += binom(l, k) * f[feature_index(l, k)] * m[k];
    m[l] = s / (1.0 - f[feature_index(l, l)]);
  }
  return m;
}

}  // namespace

JointMoments JointMoments::from_pairs(std::span<const CyclePair> pairs, std::size_t l_max) {
  if (pairs.size() < 2) throw std::invalid_argument("joint moments need at least two pairs");
  JointMoments jm;
  jm.l_max = l_max;
  jm.value.assign(l_max + 1, {});
  jm.se.assign(l_max + 1, {});
  const double n = static_cast<double>(pairs.size());
  for (std::size_t l = 0; l <= l_max; ++l) {
    jm.value[l].assign(l + 1, 0.0);
    jm.se[l].assign(l + 1, 0.0);
    for (std::size_t k = 0; k <= l; ++k) {
      double s = 0.0, ss = 0.0;
      for (const auto& p : pairs) {
        const double x = std::pow(p.c, static_cast<double>(k)) *
                         std::pow(p.d, static_cast<double>(l - k));
        s += x;
        ss += x * x;
      }
      const double mean = s / n;
      jm.value[l][k] = mean;
      jm.se[l][k] = std::sqrt(std::max(0.0, (ss - n * mean * mean) / (n - 1.0)) / n);
    }
  }
  return jm;
}

SreMoments sre_moments(const JointMoments& moments) {
  const std::size_t l_max = moments.l_max;
  std::vector<double> f(feature_count(std::max<std::size_t>(l_max, 1)), 0.0);
  for (std::size_t l = 1; l <= l_max; ++l) {
    if (!(moments.value[l][l] < 1.0)) {
      throw MomentConditionError(l, "E C^" + std::to_string(l) + " is not below 1");
    }
    for (std::size_t k = 0; k <= l; ++k) f[feature_index(l, k)] = moments.value[l][k];
  }
  SreMoments out;
  out.value = recursion(f, l_max);
  out.se.assign(l_max + 1, 0.0);
  return out;
}

SreMoments sre_moments(std::span<const CyclePair> pairs, std::size_t l_max) {
  const auto jm = JointMoments::from_pairs(pairs, l_max);
  for (std::size_t l = 1; l <= l_max; ++l) {
    if (!(jm.value[l][l] + 3.0 * jm.se[l][l] < 1.0)) {
      throw MomentConditionError(
          l, "moment condition fails at order " + std::to_string(l) + ": E C^" +
                 std::to_string(l) + " = " + std::to_string(jm.value[l][l]) + " (+3 SE) >= 1");
    }
  }
  SreMoments out = sre_moments(jm);
  if (l_max == 0) return out;

  // Delta method: influence of each pair through a numerical gradient of
  // the recursion with respect to the feature means.
  const std::size_t nf = feature_count(l_max);
  std::vector<double> f(nf);
  for (std::size_t l = 1; l <= l_max; ++l) {
    for (std::size_t k = 0; k <= l; ++k) f[feature_index(l, k)] = jm.value[l][k];
  }
  std::vector<std::vector<double>> grad(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    const double h = 1e-6 * std::max(std::fabs(f[i]), 1e-8);
    auto up = f, down = f;
    up[i] += h;
    down[i] -= h;
    const auto mu = recursion(up, l_max), md = recursion(down, l_max);
    grad[i].resize(l_max + 1);
    for (std::size_t l = 0; l <= l_max; ++l) grad[i][l] = (mu[l] - md[l]) / (2.0 * h);
  }
  const double n = static_cast<double>(pairs.size());
  std::vector<double> ss(l_max + 1, 0.0);
  std::vector<double> x(nf);
  for (const auto& p : pairs) {
    for (std::size_t l = 1; l <= l_max; ++l) {
      for (std::size_t k = 0; k <= l; ++k) {
        x[feature_index(l, k)] = std::pow(p.c, static_cast<double>(k)) *
                                     std::pow(p.d, static_cast<double>(l - k)) -
                                 f[feature_index(l, k)];
      }
    }
    for (std::size_t l = 1; l <= l_max; ++l) {
      double psi = 0.0;
      for (std::size_t i = 0; i < nf; ++i) psi += grad[i][l] * x[i];
      ss[l] += psi * psi;
    }
  }
  for (std::size_t l = 1; l <= l_max; ++l) out.se[l] = std::sqrt(ss[l] / (n - 1.0) / n);
  return out;
}

const SreMoments* MomentTable::state(StateIndex j) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == j) return &per_state[i];
  }
  return nullptr;
}

nlohmann::json MomentTable::to_json(const SemiMarkovModel& model) const {
  nlohmann::json st = nlohmann::json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    st.push_back({{"state", model.names()[states[i]]},
                  {"m", per_state[i].value},
                  {"se", per_state[i].se}});
  }
  nlohmann::json mix = nlohmann::json::array();
  for (std::size_t n = 0; n < mixture.size(); ++n) {
    mix.push_back({{"order", n + 1}, {"value", mixture[n]}});
  }
  return {{"l_max", l_max}, {"states", st}, {"mixture", mix}};
}

MomentTable build_moment_table(const LimitLawSampler& sampler, std::size_t n_max,
                               std::size_t pairs_per_state, std::size_t t_samples,
                               std::uint64_t seed) {
  MomentTable table;
  table.l_max = n_max;
  const auto& pi = sampler.pi();
  for (StateIndex j = 0; j < pi.size(); ++j) {
    if (pi[j] == 0.0) continue;
    Stream rng(seed, j);
    const auto pairs = sample_cycles(sampler.model(), sampler.rates(), j, pairs_per_state, rng,
                                     sampler.options().max_cycle_segments);
    table.states.push_back(j);
    table.per_state.push_back(sre_moments(pairs, n_max));
  }
  for (std::size_t n = 1; n <= n_max; ++n) {
    Stream rng(seed, pi.size() + n);
    table.mixture.push_back(limit_moment(sampler, table, n, t_samples, rng));
  }
  return table;
}

double limit_moment(const LimitLawSampler& sampler, const MomentTable& table, std::size_t n,
                    std::size_t t_samples, Stream& rng) {
  if (n > table.l_max) {
    throw std::invalid_argument("moment table only reaches order " + std::to_string(table.l_max));
  }
  if (t_samples == 0) throw std::invalid_argument("t_samples must be positive");
  if (n == 0) return 1.0;
  const auto& pi = sampler.pi();
  const auto& rates = sampler.rates();
  double total = 0.0;
  for (std::size_t i = 0; i < table.states.size(); ++i) {
    const StateIndex j = table.states[i];
    const auto& m = table.per_state[i].value;
    const double mu = rates.mu[j], lam = rates.lambda[j];
    std::vector<double> ew(n + 1, 0.0);
    for (std::size_t s = 0; s < t_samples; ++s) {
      const double t = residual_sampler(sampler.model(), j, rng);
      const double a = g_function(mu, lam, t);
      const double b = std::exp(-mu * t);
      for (std::size_t k = 1; k <= n; ++k) {
        double e = 0.0;
        for (std::size_t q = 0; q <= k; ++q) {
          e += binom(k, q) * std::pow(a, static_cast<double>(k - q)) *
               std::pow(b, static_cast<double>(q)) * m[q];
        }
        ew[k] += e;
      }
    }
    double s = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      s += static_cast<double>(stirling2(static_cast<unsigned>(n), static_cast<unsigned>(k))) *
           ew[k] / static_cast<double>(t_samples);
    }
    total += pi[j] * s;
  }
  return total;
}

Estimate exceedance(std::span<const double> w, std::uint64_t c) {
  if (w.empty()) throw std::invalid_argument("exceedance needs at least one replication");
  if (c == 0) return {1.0, 0.0};
  std::vector<double> p(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = poisson_upper_tail(c, w[i]);
  if (p.size() == 1) return {p[0], 0.0};
  return mean_estimate(p);
}

Estimate exceedance(const LimitLawSampler& sampler, std::uint64_t c, std::size_t k_reps,
                    Stream& rng) {
  if (k_reps == 0) throw std::invalid_argument("k_reps must be positive");
  std::vector<double> w(k_reps);
  for (auto& x : w) x = sampler.sample_w(sampler.sample_state(rng), rng);
  return exceedance(w, c);
}

Estimate exceedance(const LimitLawSampler& sampler, std::uint64_t c, std::size_t k_reps,
                    std::uint64_t seed, unsigned threads) {
  if (k_reps == 0) throw std::invalid_argument("k_reps must be positive");
  std::vector<double> w(k_reps);
  parallel_for(k_reps, threads, [&](std::size_t i) {
    Stream rng(seed, i);
    w[i] = sampler.sample_w(sampler.sample_state(rng), rng);
  });
  return exceedance(w, c);
}

}  // namespace smq

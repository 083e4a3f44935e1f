#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "smq/queue.hpp"
#include "smq/semi_markov.hpp"
#include "smq/sre.hpp"
#include "smq/stats.hpp"

namespace smq {

struct SamplerOptions {
  /// Target W1 accuracy used to pick the recursion depth per state.
  double epsilon = 1e-6;
  /// Overrides choose_n for every state when set.
  std::optional<std::size_t> depth;
  /// Pilot cycles used for the constants of each state.
  std::size_t pilot_cycles = 5000;
  /// Pilot cycles are reduced for states whose expected cycle is longer
  /// than budget / pilot_cycles segments, but never below min_pilot_cycles.
  double pilot_segment_budget = 5e7;
  std::size_t min_pilot_cycles = 50;
  std::uint64_t pilot_seed = 0x5d1c3a7bULL;
  /// Start the recursion at E D / (1 - E C) instead of 0.
  bool warm_start = true;
  /// Resample pilot pairs instead of drawing fresh cycles (approximate).
  bool bootstrap_pairs = false;
  /// States with pi_j below this mass are dropped and pi renormalised.
  double min_state_mass = 1e-10;
  std::size_t max_cycle_segments = kDefaultSegmentCap;
};

/// Per-state quantities, built lazily on first use.
struct StateSetup {
  SreDiagnostics diagnostics;
  std::size_t depth = 1;
  double v0 = 0.0;
  std::vector<CyclePair> pilot;
};

/// Sampler for the limiting mixture law of (Y, X): j ~ pi, Y ~ Poisson(W_j)
/// with W_j = G(T_j) + e^{-mu(j) T_j} V*_j.
class LimitLawSampler {
 public:
  LimitLawSampler(SemiMarkovModel model, RateMap rates, SamplerOptions options = {});

  const SemiMarkovModel& model() const { return model_; }
  const RateMap& rates() const { return rates_; }
  const SamplerOptions& options() const { return options_; }
  /// Time-stationary law restricted to states above min_state_mass.
  const std::vector<double>& pi() const { return pi_; }
  double e_pi_lambda() const { return e_pi_lambda_; }

  /// Pilot run, constants and depth of state j (thread-safe, computed once).
  const StateSetup& setup(StateIndex j) const;
  std::size_t depth(StateIndex j) const { return setup(j).depth; }
  const SreDiagnostics& diagnostics(StateIndex j) const { return setup(j).diagnostics; }

  StateIndex sample_state(Stream& rng) const;
  /// V_(j,n) from n fresh cycles starting at v0.
  double sample_v(StateIndex j, std::size_t n, double v0, Stream& rng) const;
  /// V at the configured depth and start value.
  double sample_v(StateIndex j, Stream& rng) const;
  double sample_w(StateIndex j, Stream& rng) const;

  nlohmann::json diagnostics_json() const;

 private:
  SemiMarkovModel model_;
  RateMap rates_;
  SamplerOptions options_;
  std::vector<double> pi_;
  std::vector<double> pi_cumulative_;
  double e_pi_lambda_ = 0.0;
  std::unique_ptr<std::once_flag[]> once_;
  mutable std::vector<StateSetup> setups_;
};

double sample_W(const LimitLawSampler& sampler, StateIndex j, Stream& rng);

struct LimitDraw {
  std::uint64_t count;
  StateIndex state;
  double w;
};

LimitDraw sample_limit_pair(const LimitLawSampler& sampler, Stream& rng);

/// `n` draws where draw i uses Stream(seed, i); identical for any thread count.
std::vector<LimitDraw> sample_limit_pairs(const LimitLawSampler& sampler, std::size_t n,
                                          std::uint64_t seed, unsigned threads = 1);

/// Stirling number of the second kind; throws std::out_of_range unless
/// k <= n <= 64 and std::overflow_error if the value exceeds 64 bits.
std::uint64_t stirling2(unsigned n, unsigned k);

/// Sample moments E[C^k D^{l-k}] of cycle pairs, l <= l_max, with SEs.
struct JointMoments {
  std::size_t l_max = 0;
  std::vector<std::vector<double>> value;  // value[l][k]
  std::vector<std::vector<double>> se;

  static JointMoments from_pairs(std::span<const CyclePair> pairs, std::size_t l_max);
};

/// m^{(l)} for l = 0..l_max with delta-method standard errors.
struct SreMoments {
  std::vector<double> value;
  std::vector<double> se;
};

/// Moments of the SRE fixed point from cycle pairs. Throws
/// MomentConditionError when E C^l + 3 SE is not below 1.
SreMoments sre_moments(std::span<const CyclePair> pairs, std::size_t l_max);
/// Same recursion from exact joint moments (no standard errors).
SreMoments sre_moments(const JointMoments& moments);

/// Per-state m_j^{(l)} and mixture moments of the limiting count.
struct MomentTable {
  std::size_t l_max = 0;
  std::vector<StateIndex> states;
  std::vector<SreMoments> per_state;
  std::vector<double> mixture;  // mixture[n - 1] = E Y^n

  const SreMoments* state(StateIndex j) const;
  nlohmann::json to_json(const SemiMarkovModel& model) const;
};

/// Builds the table from `pairs_per_state` fresh cycles per state in the
/// support of pi; state j uses Stream(seed, j) and mixture moments use
/// Stream(seed, K + n).
MomentTable build_moment_table(const LimitLawSampler& sampler, std::size_t n_max,
                               std::size_t pairs_per_state, std::size_t t_samples,
                               std::uint64_t seed);

/// E Y^n = sum_j pi_j sum_k S(n,k) E W_j^k, with E W_j^k averaged over
/// t_samples draws of T_j.
double limit_moment(const LimitLawSampler& sampler, const MomentTable& table, std::size_t n,
                    std::size_t t_samples, Stream& rng);

/// Monte Carlo mean of P[Poisson(W) >= c] over j ~ pi and W draws.
Estimate exceedance(const LimitLawSampler& sampler, std::uint64_t c, std::size_t k_reps,
                    Stream& rng);
/// Thread-count independent variant: replication i uses Stream(seed, i).
Estimate exceedance(const LimitLawSampler& sampler, std::uint64_t c, std::size_t k_reps,
                    std::uint64_t seed, unsigned threads);
/// Exceedance estimate from already drawn mixing values.
Estimate exceedance(std::span<const double> w, std::uint64_t c);

}  // namespace smq

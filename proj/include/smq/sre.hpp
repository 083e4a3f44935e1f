#pragma once

#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "smq/queue.hpp"
#include "smq/semi_markov.hpp"

namespace smq {

/// Regeneration-cycle functional (C, D): the service discount over one
/// cycle and the discounted arrival mass surviving to its end.
struct CyclePair {
  double c;
  double d;
};

struct SreDiagnostics {
  double mean_c = 0.0;
  double mean_d = 0.0;
  double a1 = 0.0;  // (E_pi lambda) E|I_j| / (1 - E C)
  double r = 0.0;   // -log E C
  double mean_log_c = 0.0;
  double mean_log_plus_d = 0.0;
  double se_c = 0.0;
  double se_d = 0.0;
  std::size_t samples = 0;

  nlohmann::json to_json() const;
};

CyclePair cycle_functionals(std::span<const Segment> cycle, const RateMap& rates);
CyclePair cycle_functionals(const Trajectory& cycle, const RateMap& rates);

/// One fresh regeneration cycle started at `anchor`: segments up to (not
/// including) the next sojourn that begins at `anchor`.
Trajectory sample_cycle(const SemiMarkovModel& model, StateIndex anchor, Stream& rng,
                        std::size_t max_segments = kDefaultSegmentCap);

/// Functionals of one fresh cycle without materialising the path.
CyclePair sample_cycle_pair(const SemiMarkovModel& model, const RateMap& rates,
                            StateIndex anchor, Stream& rng,
                            std::size_t max_segments = kDefaultSegmentCap);

std::vector<CyclePair> sample_cycles(const SemiMarkovModel& model, const RateMap& rates,
                                     StateIndex anchor, std::size_t n, Stream& rng,
                                     std::size_t max_segments = kDefaultSegmentCap);

/// Pairs chopped from the complete cycles of one long trajectory.
std::vector<CyclePair> chop_cycles(const Trajectory& trajectory, StateIndex anchor,
                                   const RateMap& rates);

/// V_i = C_i V_{i-1} + D_i folded over the pairs in order.
double forward_recursion(std::span<const CyclePair> pairs, double v0 = 0.0);

/// Plug-in estimates of the geometric convergence constants. Throws
/// InvalidRateError when the sample mean of C is not below 1.
SreDiagnostics estimate_constants(std::span<const CyclePair> pairs, double e_pi_lambda,
                                  double mean_cycle_len);

/// Smallest n >= 1 with a1 e^{-r n} <= epsilon.
std::size_t choose_n(const SreDiagnostics& diag, double epsilon);

void write_pairs_csv(std::ostream& os, std::span<const CyclePair> pairs);

}  // namespace smq

#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "smq/rng.hpp"

namespace smq {

/// Two-server model where departures drain the active server's bandwidth,
/// so the environment receives feedback from the queue.
struct FeedbackParams {
  double lambda0;  // switch rate out of server status 0
  double lambda1;  // switch rate out of server status 1
  double lambda;   // arrival rate
  double q1;       // service multiplier while status 0
  double q2;       // service multiplier while status 1
  int k;           // bandwidth levels

  void validate() const;
  /// k < (lambda / 2)(1 / lambda1 + 1 / lambda0)
  bool transient_regime() const;
  /// Service rate of the environment state (x1, x2).
  double service_rate(int x1, int x2) const;
};

struct FeedbackPath {
  std::vector<double> times;
  std::vector<int> x1;
  std::vector<int> x2;
  std::vector<std::uint64_t> y;

  void write_csv(std::ostream& os) const;
};

struct FeedbackOptions {
  int x1 = 0;
  /// Initial bandwidth of the active server; negative means k.
  int x2 = -1;
  std::size_t max_events = 100'000'000;
};

/// CTMC on {0,1} x {0..k} x N with server switches (bandwidth flips to
/// k - x2), arrivals, and departures at rate q_{x1} x2 y.
FeedbackPath simulate_feedback(const FeedbackParams& params, std::uint64_t y0,
                               double horizon, Stream& rng,
                               const FeedbackOptions& options = {});

/// Increments of Y between successive entries of X1 into `anchor`.
std::vector<double> cycle_increments(const FeedbackPath& path, int anchor = 1);

double growth_rate(const FeedbackPath& path);

}  // namespace smq

#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "smq/rng.hpp"
#include "smq/semi_markov.hpp"

namespace smq {

/// Arrival rate lambda(.) and per-customer service rate mu(.) per state.
struct RateMap {
  std::vector<double> lambda;
  std::vector<double> mu;

  RateMap() = default;
  RateMap(std::vector<double> lambda, std::vector<double> mu);

  static RateMap constant(std::size_t states, double lambda, double mu);

  std::size_t size() const { return lambda.size(); }

  /// E_pi lambda(.)
  double mean_arrival(std::span<const double> pi) const;
  /// E_pi mu(.)
  double mean_service(std::span<const double> pi) const;
  /// Throws InvalidRateError unless E_pi mu(.) > 0.
  void require_positive_service(std::span<const double> pi) const;

  nlohmann::json to_json() const;
  static RateMap from_json(const nlohmann::json& j);
};

/// Count process sampled at increasing times.
struct QueuePath {
  std::vector<double> times;
  std::vector<std::uint64_t> counts;
  std::shared_ptr<const Trajectory> environment;

  std::uint64_t terminal() const { return counts.back(); }
  void write_csv(std::ostream& os) const;
};

/// G(x) = integral_0^x d e^{-c (x - s)} ds, i.e. x d when c = 0 and
/// (d / c)(1 - e^{-x c}) otherwise.
double g_function(double c, double d, double x);

/// Exact one-segment transition: Bin(y0, e^{-mu dt}) + Poi(G(mu, lam, dt)).
std::uint64_t interval_update(std::uint64_t y0, double lam, double mu, double dt, Stream& rng);

/// Applies interval_update across every segment and records Y at each
/// segment boundary.
QueuePath simulate_conditional(const Trajectory& traj, const RateMap& rates, std::uint64_t y0,
                               Stream& rng);

/// Terminal count at `horizon` drawn from Bin(y0, Phi) + Poi(I) with the
/// functionals accumulated while the environment is generated. Same law
/// as simulate_conditional(...).terminal() without storing the path.
std::uint64_t conditional_terminal(const SemiMarkovModel& model, const RateMap& rates,
                                   std::uint64_t y0, double horizon, Stream& rng);

struct GillespieOptions {
  std::size_t max_events = 100'000'000;
  /// When false only the initial and terminal points are stored.
  bool record_jumps = true;
};

/// Event-driven simulation: within each sojourn, competing exponential
/// clocks with rates lambda(j) and Y mu(j).
QueuePath simulate_gillespie(const SemiMarkovModel& model, const RateMap& rates,
                             std::uint64_t y0, double horizon, Stream& rng,
                             const GillespieOptions& options = {});

struct PhiAndI {
  double phi;
  double i_integral;
};

/// Phi_t = exp(-int mu(X_s) ds) and I_t = int lambda(X_s) e^{-int_s^t mu} ds
/// over a piecewise-constant path, in closed form.
PhiAndI phi_and_i(const Trajectory& traj, const RateMap& rates);
PhiAndI phi_and_i(std::span<const Segment> segments, const RateMap& rates);

/// Least-squares slope of counts against times over the second half of the
/// time span.
double growth_rate(std::span<const double> times, std::span<const double> counts);
double growth_rate(const QueuePath& path);

}  // namespace smq

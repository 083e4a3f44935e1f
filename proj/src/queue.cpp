#include "smq/queue.hpp"

#include <cmath>
#include <stdexcept>

#include "smq/discrete.hpp"
#include "smq/error.hpp"

namespace smq {

RateMap::RateMap(std::vector<double> lam, std::vector<double> m)
    : lambda(std::move(lam)), mu(std::move(m)) {
  if (lambda.size() != mu.size()) {
    throw std::invalid_argument("lambda and mu must cover the same states");
  }
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!std::isfinite(lambda[i]) || lambda[i] < 0.0 || !std::isfinite(mu[i]) || mu[i] < 0.0) {
      throw std::invalid_argument("rates must be finite and nonnegative (state " +
                                  std::to_string(i) + ")");
    }
  }
}

RateMap RateMap::constant(std::size_t states, double lam, double m) {
  return RateMap(std::vector<double>(states, lam), std::vector<double>(states, m));
}

double RateMap::mean_arrival(std::span<const double> pi) const {
  double s = 0.0;
  for (std::size_t j = 0; j < pi.size(); ++j) s += pi[j] * lambda.at(j);
  return s;
}

double RateMap::mean_service(std::span<const double> pi) const {
  double s = 0.0;
  for (std::size_t j = 0; j < pi.size(); ++j) s += pi[j] * mu.at(j);
  return s;
}

void RateMap::require_positive_service(std::span<const double> pi) const {
  if (!(mean_service(pi) > 0.0)) {
    throw InvalidRateError("stationary mean service rate E_pi mu must be positive");
  }
}

nlohmann::json RateMap::to_json() const { return {{"lambda", lambda}, {"mu", mu}}; }

RateMap RateMap::from_json(const nlohmann::json& j) {
  return RateMap(j.at("lambda").get<std::vector<double>>(),
                 j.at("mu").get<std::vector<double>>());
}

void QueuePath::write_csv(std::ostream& os) const {
  os << "time,count\n";
  os.precision(17);
  for (std::size_t i = 0; i < times.size(); ++i) os << times[i] << ',' << counts[i] << '\n';
}

double g_function(double c, double d, double x) {
  if (c == 0.0) return x * d;
  // expm1 keeps the c -> 0 limit continuous.
  return -d / c * std::expm1(-x * c);
}

std::uint64_t interval_update(std::uint64_t y0, double lam, double mu, double dt,
                              Stream& rng) {
  if (!(dt >= 0.0)) throw std::invalid_argument("interval length must be nonnegative");
  const std::uint64_t survivors = sample_binomial(y0, std::exp(-mu * dt), rng);
  return survivors + sample_poisson(g_function(mu, lam, dt), rng);
}

QueuePath simulate_conditional(const Trajectory& traj, const RateMap& rates, std::uint64_t y0,
                               Stream& rng) {
  QueuePath path;
  path.environment = std::make_shared<const Trajectory>(traj);
  path.times.reserve(traj.size() + 1);
  path.counts.reserve(traj.size() + 1);
  double t = 0.0;
  std::uint64_t y = y0;
  path.times.push_back(t);
  path.counts.push_back(y);
  for (const auto& seg : traj.segments()) {
    if (seg.length > 0.0) {
      y = interval_update(y, rates.lambda.at(seg.state), rates.mu.at(seg.state), seg.length, rng);
    }
    t += seg.length;
    path.times.push_back(t);
    path.counts.push_back(y);
  }
  return path;
}

std::uint64_t conditional_terminal(const SemiMarkovModel& model, const RateMap& rates,
                                   std::uint64_t y0, double horizon, Stream& rng) {
  double phi = 1.0;
  double integral = 0.0;
  if (horizon > 0.0) {
    walk_environment(model, horizon, rng, [&](StateIndex s, double len) {
      const double mu = rates.mu[s];
      const double decay = std::exp(-mu * len);
      phi *= decay;
      integral = integral * decay + g_function(mu, rates.lambda[s], len);
    });
  } else {
    model.sample_initial(rng);
  }
  return sample_binomial(y0, phi, rng) + sample_poisson(integral, rng);
}

QueuePath simulate_gillespie(const SemiMarkovModel& model, const RateMap& rates,
                             std::uint64_t y0, double horizon, Stream& rng,
                             const GillespieOptions& options) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  require_valid(model);
  QueuePath path;
  auto env = std::make_shared<Trajectory>();
  std::uint64_t y = y0;
  double segment_start = 0.0;
  std::size_t events = 0;
  path.times.push_back(0.0);
  path.counts.push_back(y);

  auto run_segment = [&](StateIndex s, double len) {
    env->push(s, len);
    const double lam = rates.lambda.at(s);
    const double mu = rates.mu.at(s);
    double local = 0.0;
    for (;;) {
      const double total = lam + static_cast<double>(y) * mu;
      if (total <= 0.0) break;
      local += rng.exponential(total);
      if (local >= len) break;
      if (++events > options.max_events) {
        throw ExplosionError("gillespie exceeded " + std::to_string(options.max_events) +
                             " events");
      }
      if (rng.uniform() * total < lam) {
        ++y;
      } else {
        --y;
      }
      if (options.record_jumps) {
        path.times.push_back(segment_start + local);
        path.counts.push_back(y);
      }
    }
    segment_start += len;
  };

  if (horizon == 0.0) {
    env->push(model.sample_initial(rng), 0.0);
  } else {
    walk_environment(model, horizon, rng, run_segment);
  }
  if (path.times.back() != horizon) {
    path.times.push_back(horizon);
    path.counts.push_back(y);
  }
  path.environment = std::move(env);
  return path;
}

PhiAndI phi_and_i(std::span<const Segment> segments, const RateMap& rates) {
  // Reverse pass: `mass` is the service mass of all later segments.
  double mass = 0.0;
  double integral = 0.0;
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    const double mu = rates.mu.at(it->state);
    integral += std::exp(-mass) * g_function(mu, rates.lambda.at(it->state), it->length);
    mass += mu * it->length;
  }
  return {std::exp(-mass), integral};
}

PhiAndI phi_and_i(const Trajectory& traj, const RateMap& rates) {
  return phi_and_i(std::span<const Segment>(traj.segments()), rates);
}

double growth_rate(std::span<const double> times, std::span<const double> counts) {
  if (times.size() != counts.size() || times.size() < 2) {
    throw std::invalid_argument("growth_rate needs at least two points");
  }
  const double mid = times.front() + 0.5 * (times.back() - times.front());
  double n = 0.0, st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < mid) continue;
    n += 1.0;
    st += times[i];
    sy += counts[i];
  }
  if (n < 2.0) throw std::invalid_argument("growth_rate: fewer than two points in second half");
  const double tbar = st / n, ybar = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < mid) continue;
    sxx += (times[i] - tbar) * (times[i] - tbar);
    sxy += (times[i] - tbar) * (counts[i] - ybar);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("growth_rate: degenerate time span");
  return sxy / sxx;
}

double growth_rate(const QueuePath& path) {
  std::vector<double> c(path.counts.begin(), path.counts.end());
  return growth_rate(path.times, c);
}

}  // namespace smq

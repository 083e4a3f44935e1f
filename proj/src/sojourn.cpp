#include "smq/sojourn.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <stdexcept>

#include "smq/error.hpp"

namespace smq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInversionTolerance = 1e-10;

// Solves tail_integral(x) = target for x >= 0 by bracketing then TOMS 748.
double invert_tail_integral(const std::function<double(double)>& tail, double target) {
  if (tail(0.0) <= target) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (tail(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 1100) {
      throw ConvergenceError("equilibrium inversion could not bracket the root");
    }
  }
  auto f = [&](double x) { return tail(x) - target; };
  auto stop = [](double a, double b) { return std::fabs(b - a) < kInversionTolerance; };
  std::uintmax_t max_iter = 500;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, stop, max_iter);
  return 0.5 * (a + b);
}

}  // namespace

SojournDist SojournDist::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("exponential rate must be positive and finite");
  }
  return SojournDist(Exponential{rate});
}

SojournDist SojournDist::shifted_pareto(double shape) {
  if (!std::isfinite(shape)) throw std::invalid_argument("pareto shape must be finite");
  if (!(shape > 1.0)) {
    throw InfiniteMeanError("shifted Pareto with shape <= 1 has infinite mean");
  }
  return SojournDist(ShiftedPareto{shape});
}

SojournDist SojournDist::custom(std::function<double(Stream&)> sampler, double mean,
                                std::function<double(double)> tail_integral) {
  if (!sampler) throw std::invalid_argument("custom sojourn requires a sampler");
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw InfiniteMeanError("custom sojourn mean must be positive and finite");
  }
  return SojournDist(CustomSojourn{std::move(sampler), mean, std::move(tail_integral)});
}

SojournDist SojournDist::custom_from_survival(std::function<double(Stream&)> sampler,
                                              std::function<double(double)> survival) {
  auto tail = [survival](double x) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double y) { return survival(x + y); }, 0.0,
                                std::numeric_limits<double>::infinity());
  };
  const double m = tail(0.0);
  return custom(std::move(sampler), m, tail);
}

double SojournDist::mean() const {
  return std::visit(overloaded{[](const Exponential& d) { return 1.0 / d.rate; },
                               [](const ShiftedPareto& d) { return 1.0 / (d.shape - 1.0); },
                               [](const CustomSojourn& d) { return d.mean; }},
                    dist_);
}

double SojournDist::sample(Stream& rng) const {
  return std::visit(
      overloaded{[&](const Exponential& d) { return -std::log(rng.uniform()) / d.rate; },
                 [&](const ShiftedPareto& d) {
                   return std::pow(rng.uniform(), -1.0 / d.shape) - 1.0;
                 },
                 [&](const CustomSojourn& d) { return d.sampler(rng); }},
      dist_);
}

double SojournDist::tail_integral(double x) const {
  if (!(x >= 0.0)) throw std::invalid_argument("tail integral needs x >= 0");
  return std::visit(
      overloaded{[&](const Exponential& d) { return std::exp(-d.rate * x) / d.rate; },
                 [&](const ShiftedPareto& d) {
                   return std::pow(1.0 + x, -(d.shape - 1.0)) / (d.shape - 1.0);
                 },
                 [&](const CustomSojourn& d) -> double {
                   if (!d.tail_integral) {
                     throw UnsupportedOperation("custom sojourn has no tail integral");
                   }
                   return x == 0.0 ? d.mean : d.tail_integral(x);
                 }},
      dist_);
}

double SojournDist::equilibrium_sample(Stream& rng) const {
  return std::visit(
      overloaded{
          // Exponential laws are fixed points of the equilibrium transform.
          [&](const Exponential& d) { return -std::log(rng.uniform()) / d.rate; },
          // Survival (1 + x)^-(shape - 1): shifted Pareto with shape - 1.
          [&](const ShiftedPareto& d) {
            return std::pow(rng.uniform(), -1.0 / (d.shape - 1.0)) - 1.0;
          },
          [&](const CustomSojourn& d) {
            if (!d.tail_integral) {
              throw UnsupportedOperation(
                  "equilibrium sampling needs the tail integral of a custom sojourn");
            }
            return invert_tail_integral(d.tail_integral, d.mean * rng.uniform());
          }},
      dist_);
}

nlohmann::json SojournDist::to_json() const {
  return std::visit(
      overloaded{
          [](const Exponential& d) { return nlohmann::json{{"kind", "exp"}, {"rate", d.rate}}; },
          [](const ShiftedPareto& d) {
            return nlohmann::json{{"kind", "pareto_shifted"}, {"shape", d.shape}};
          },
          [](const CustomSojourn&) -> nlohmann::json {
            throw UnsupportedOperation("custom sojourns cannot be serialized");
          }},
      dist_);
}

SojournDist SojournDist::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "exp") return exponential(j.at("rate").get<double>());
  if (kind == "pareto_shifted") return shifted_pareto(j.at("shape").get<double>());
  throw std::invalid_argument("unknown sojourn kind '" + kind + "'");
}

}  // namespace smq

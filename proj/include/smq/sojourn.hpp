#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <variant>

#include "smq/rng.hpp"

namespace smq {

struct Exponential {
  double rate;
};

/// Law of Pareto(1, shape) - 1, supported on [0, inf).
struct ShiftedPareto {
  double shape;
};

/// User-supplied sojourn law. The caller is responsible for absolute
/// continuity and for the consistency of the three handles.
struct CustomSojourn {
  std::function<double(Stream&)> sampler;
  double mean;
  /// x -> integral over [x, inf) of (1 - F(y)) dy. May be empty, in which
  /// case tail integrals and equilibrium draws are unsupported.
  std::function<double(double)> tail_integral;
};

/// A sojourn-time distribution on [0, inf) with finite positive mean.
/// Immutable once constructed; safe to share between threads.
class SojournDist {
 public:
  using Variant = std::variant<Exponential, ShiftedPareto, CustomSojourn>;

  static SojournDist exponential(double rate);
  /// Throws InfiniteMeanError when shape <= 1.
  static SojournDist shifted_pareto(double shape);
  static SojournDist custom(std::function<double(Stream&)> sampler, double mean,
                            std::function<double(double)> tail_integral = {});
  /// Custom law built from its survival function; tail integrals and the
  /// mean are evaluated by numerical quadrature.
  static SojournDist custom_from_survival(std::function<double(Stream&)> sampler,
                                          std::function<double(double)> survival);

  double mean() const;
  double sample(Stream& rng) const;
  double tail_integral(double x) const;
  /// Draw with density (1 - F(y)) / mean on [0, inf).
  double equilibrium_sample(Stream& rng) const;

  const Variant& variant() const { return dist_; }

  nlohmann::json to_json() const;
  static SojournDist from_json(const nlohmann::json& j);

 private:
  explicit SojournDist(Variant v) : dist_(std::move(v)) {}
  Variant dist_;
};

}  // namespace smq

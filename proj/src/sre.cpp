#include "smq/sre.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "smq/error.hpp"

namespace smq {

nlohmann::json SreDiagnostics::to_json() const {
  return {{"mean_c", mean_c},         {"mean_d", mean_d},
          {"a1", a1},                 {"r", r},
          {"mean_log_c", mean_log_c}, {"mean_log_plus_d", mean_log_plus_d},
          {"se_c", se_c},             {"se_d", se_d},
          {"samples", samples}};
}

CyclePair cycle_functionals(std::span<const Segment> cycle, const RateMap& rates) {
  const auto f = phi_and_i(cycle, rates);
  return {f.phi, f.i_integral};
}

CyclePair cycle_functionals(const Trajectory& cycle, const RateMap& rates) {
  return cycle_functionals(std::span<const Segment>(cycle.segments()), rates);
}

namespace {

template <class Visitor>
void walk_cycle(const SemiMarkovModel& model, StateIndex anchor, Stream& rng,
                std::size_t max_segments, Visitor&& visit) {
  StateIndex state = anchor;
  std::size_t count = 0;
  do {
    if (++count > max_segments) {
      throw ExplosionError("regeneration cycle exceeded " + std::to_string(max_segments) +
                           " segments");
    }
    const auto& tr = model.sample_transition(state, rng);
    if (tr.sojourn == nullptr) throw InvalidModelError("missing sojourn law");
    visit(state, tr.sojourn->sample(rng));
    state = tr.to;
  } while (state != anchor);
}

}  // namespace

Trajectory sample_cycle(const SemiMarkovModel& model, StateIndex anchor, Stream& rng,
                        std::size_t max_segments) {
  Trajectory out;
  walk_cycle(model, anchor, rng, max_segments,
             [&](StateIndex s, double len) { out.push(s, len); });
  return out;
}

CyclePair sample_cycle_pair(const SemiMarkovModel& model, const RateMap& rates,
                            StateIndex anchor, Stream& rng, std::size_t max_segments) {
  // Forward accumulation equals the reverse-pass definition:
  // D <- e^{-mu len} D + G(mu, lambda, len), C <- e^{-mu len} C.
  double c = 1.0;
  double d = 0.0;
  walk_cycle(model, anchor, rng, max_segments, [&](StateIndex s, double len) {
    const double mu = rates.mu[s];
    const double decay = std::exp(-mu * len);
    c *= decay;
    d = d * decay + g_function(mu, rates.lambda[s], len);
  });
  return {c, d};
}

std::vector<CyclePair> sample_cycles(const SemiMarkovModel& model, const RateMap& rates,
                                     StateIndex anchor, std::size_t n, Stream& rng,
                                     std::size_t max_segments) {
  std::vector<CyclePair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(sample_cycle_pair(model, rates, anchor, rng, max_segments));
  }
  return out;
}

std::vector<CyclePair> chop_cycles(const Trajectory& trajectory, StateIndex anchor,
                                   const RateMap& rates) {
  const auto dec = decompose_cycles(trajectory, anchor);
  std::vector<CyclePair> out;
  out.reserve(dec.cycles.size());
  for (const auto& cycle : dec.cycles) out.push_back(cycle_functionals(cycle, rates));
  return out;
}

double forward_recursion(std::span<const CyclePair> pairs, double v0) {
  double v = v0;
  for (const auto& p : pairs) v = p.c * v + p.d;
  return v;
}

SreDiagnostics estimate_constants(std::span<const CyclePair> pairs, double e_pi_lambda,
                                  double mean_cycle_len) {
  if (pairs.empty()) throw std::invalid_argument("estimate_constants needs pairs");
  SreDiagnostics diag;
  const double n = static_cast<double>(pairs.size());
  double sc = 0.0, sd = 0.0, scc = 0.0, sdd = 0.0, slc = 0.0, sld = 0.0;
  for (const auto& p : pairs) {
    sc += p.c;
    sd += p.d;
    scc += p.c * p.c;
    sdd += p.d * p.d;
    slc += std::log(std::max(p.c, std::numeric_limits<double>::denorm_min()));
    sld += std::log(std::max(p.d, 1.0));
  }
  diag.samples = pairs.size();
  diag.mean_c = sc / n;
  diag.mean_d = sd / n;
  diag.mean_log_c = slc / n;
  diag.mean_log_plus_d = sld / n;
  if (pairs.size() > 1) {
    diag.se_c = std::sqrt(std::max(0.0, (scc - n * diag.mean_c * diag.mean_c) / (n - 1)) / n);
    diag.se_d = std::sqrt(std::max(0.0, (sdd - n * diag.mean_d * diag.mean_d) / (n - 1)) / n);
  }
  if (!(diag.mean_c < 1.0)) {
    throw InvalidRateError(
        "sample mean of C is not below 1: E_pi mu <= 0 or too few cycles sampled");
  }
  diag.r = -std::log(diag.mean_c);
  diag.a1 = e_pi_lambda * mean_cycle_len / (1.0 - diag.mean_c);
  return diag;
}

std::size_t choose_n(const SreDiagnostics& diag, double epsilon) {
  if (!(diag.r > 0.0)) throw InvalidRateError("choose_n needs r > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (diag.a1 <= epsilon) return 1;
  const double n = std::ceil(std::log(diag.a1 / epsilon) / diag.r);
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

void write_pairs_csv(std::ostream& os, std::span<const CyclePair> pairs) {
  os << "c,d\n";
  os.precision(17);
  for (const auto& p : pairs) os << p.c << ',' << p.d << '\n';
}

}  // namespace smq

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smq/error.hpp"
#include "smq/rng.hpp"
#include "smq/sojourn.hpp"

namespace smq {

using StateIndex = std::size_t;

/// Dense row-major K x K matrix of transition probabilities.
using Kernel = std::vector<std::vector<double>>;

inline constexpr std::size_t kDefaultSegmentCap = 100'000'000;

/// Semi-Markov environment: embedded kernel P (zero diagonal), sojourn law
/// F_ij for every allowed transition, and initial law p.
///
/// The constructor only checks shapes; semantic checks live in
/// validate_model() so that invalid models can still be reported on.
class SemiMarkovModel {
 public:
  struct Transition {
    StateIndex to;
    double probability;
    double cumulative;
    const SojournDist* sojourn;  // null when the law is missing
  };

  SemiMarkovModel(std::vector<std::string> names, Kernel kernel,
                  std::vector<std::vector<std::optional<SojournDist>>> sojourns,
                  std::vector<double> initial);

  SemiMarkovModel(const SemiMarkovModel& other);
  SemiMarkovModel& operator=(const SemiMarkovModel& other);
  SemiMarkovModel(SemiMarkovModel&&) noexcept = default;
  SemiMarkovModel& operator=(SemiMarkovModel&&) noexcept = default;

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const Kernel& kernel() const { return kernel_; }
  const std::vector<double>& initial() const { return initial_; }
  const std::optional<SojournDist>& sojourn(StateIndex i, StateIndex j) const {
    return sojourns_[i][j];
  }
  /// Allowed transitions out of i, in index order.
  const std::vector<Transition>& successors(StateIndex i) const { return successors_[i]; }

  /// Resolves a state by name, falling back to a decimal index.
  StateIndex index_of(const std::string& name_or_index) const;

  /// Samples the successor of `from` by cumulative-sum inversion.
  const Transition& sample_transition(StateIndex from, Stream& rng) const;
  StateIndex sample_initial(Stream& rng) const;

  /// Same model with a different initial law.
  SemiMarkovModel with_initial(std::vector<double> initial) const;
  SemiMarkovModel started_at(StateIndex state) const;

  nlohmann::json to_json() const;
  static SemiMarkovModel from_json(const nlohmann::json& j);

 private:
  void build_successors();

  std::vector<std::string> names_;
  Kernel kernel_;
  std::vector<std::vector<std::optional<SojournDist>>> sojourns_;
  std::vector<double> initial_;
  std::vector<std::vector<Transition>> successors_;
  std::vector<double> initial_cumulative_;
};

struct ValidationCheck {
  std::string clause;
  bool passed;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const;
  const ValidationCheck* find(const std::string& clause) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Checks zero diagonal, row-stochasticity, irreducibility, sojourn
/// coverage, finite sup-mean and the initial law. Never throws.
ValidationReport validate_model(const SemiMarkovModel& model);

/// Throws InvalidModelError listing failed clauses.
void require_valid(const SemiMarkovModel& model);

/// Stationary law of the embedded chain: dense LU for K <= 200, lazy power
/// iteration above.
std::vector<double> stationary_embedded(const SemiMarkovModel& model, double tol = 1e-12,
                                        std::size_t max_iterations = 1'000'000);

/// m_i = sum_j P_ij mean(F_ij).
double mean_sojourn(const SemiMarkovModel& model, StateIndex i);

/// Time-stationary law pi_j proportional to mu_j m_j.
std::vector<double> stationary_time(const SemiMarkovModel& model);

/// Expected regeneration-cycle length at j: sum_k mu_k m_k / mu_j.
double mean_cycle_length(const SemiMarkovModel& model, StateIndex j);

struct Segment {
  StateIndex state;
  double length;

  bool operator==(const Segment&) const = default;
};

/// Piecewise-constant environment path.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Segment> segments);

  /// Appends a segment; consecutive segments must differ in state.
  void push(StateIndex state, double length);

  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }
  StateIndex start_state() const;
  double total_time() const { return total_time_; }

  bool operator==(const Trajectory& other) const { return segments_ == other.segments_; }

 private:
  std::vector<Segment> segments_;
  double total_time_ = 0.0;
};

/// Walks the environment from time 0 to `horizon`, calling
/// visit(state, length) once per segment; the final sojourn is truncated at
/// the horizon. Returns the number of segments visited.
template <class Visitor>
std::size_t walk_environment(const SemiMarkovModel& model, double horizon, Stream& rng,
                             Visitor&& visit,
                             std::size_t max_segments = kDefaultSegmentCap);

Trajectory sample_trajectory(const SemiMarkovModel& model, double horizon, Stream& rng,
                             std::size_t max_segments = kDefaultSegmentCap);

/// Draw from the size-biased residual law pi*_j.
double residual_sampler(const SemiMarkovModel& model, StateIndex j, Stream& rng);

struct CycleDecomposition {
  StateIndex anchor;
  Trajectory pre_cycle;
  std::vector<Trajectory> cycles;
  Trajectory residual;

  /// Concatenation of every piece, in order.
  Trajectory concatenate() const;
};

CycleDecomposition decompose_cycles(const Trajectory& trajectory, StateIndex anchor);

// ---------------------------------------------------------------------------

template <class Visitor>
std::size_t walk_environment(const SemiMarkovModel& model, double horizon, Stream& rng,
                             Visitor&& visit, std::size_t max_segments) {
  StateIndex state = model.sample_initial(rng);
  double elapsed = 0.0;
  std::size_t count = 0;
  for (;;) {
    if (++count > max_segments) {
      throw ExplosionError("environment exceeded " + std::to_string(max_segments) +
                           " segments before the horizon");
    }
    const auto& tr = model.sample_transition(state, rng);
    if (tr.sojourn == nullptr) {
      throw InvalidModelError("missing sojourn law for " + model.names()[state] + "->" +
                              model.names()[tr.to]);
    }
    const double sojourn = tr.sojourn->sample(rng);
    if (elapsed + sojourn >= horizon) {
      visit(state, horizon - elapsed);
      return count;
    }
    visit(state, sojourn);
    elapsed += sojourn;
    state = tr.to;
  }
}

}  // namespace smq

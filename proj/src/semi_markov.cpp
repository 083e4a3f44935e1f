#include "smq/semi_markov.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "smq/error.hpp"

namespace smq {

namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr std::size_t kDenseSolveLimit = 200;

std::string transition_name(const SemiMarkovModel& m, StateIndex i, StateIndex j) {
  const std::string idx = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
  if (m.names()[i] == std::to_string(i) && m.names()[j] == std::to_string(j)) return idx;
  return idx + " " + m.names()[i] + "->" + m.names()[j];
}

// Forward reachability from `start` over edges with positive probability.
std::vector<bool> reachable_from(const Kernel& p, StateIndex start, bool transpose) {
  const std::size_t k = p.size();
  std::vector<bool> seen(k, false);
  std::vector<StateIndex> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const StateIndex i = stack.back();
    stack.pop_back();
    for (StateIndex j = 0; j < k; ++j) {
      const double w = transpose ? p[j][i] : p[i][j];
      if (w > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace

SemiMarkovModel::SemiMarkovModel(std::vector<std::string> names, Kernel kernel,
                                 std::vector<std::vector<std::optional<SojournDist>>> sojourns,
                                 std::vector<double> initial)
    : names_(std::move(names)),
      kernel_(std::move(kernel)),
      sojourns_(std::move(sojourns)),
      initial_(std::move(initial)) {
  const std::size_t k = names_.size();
  if (k == 0) throw std::invalid_argument("model needs at least one state");
  if (kernel_.size() != k || sojourns_.size() != k || initial_.size() != k) {
    throw std::invalid_argument("kernel, sojourn table and initial law must have " +
                                std::to_string(k) + " rows");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (kernel_[i].size() != k || sojourns_[i].size() != k) {
      throw std::invalid_argument("row " + std::to_string(i) + " has the wrong length");
    }
  }
  build_successors();
}

SemiMarkovModel::SemiMarkovModel(const SemiMarkovModel& other)
    : names_(other.names_),
      kernel_(other.kernel_),
      sojourns_(other.sojourns_),
      initial_(other.initial_) {
  build_successors();
}

SemiMarkovModel& SemiMarkovModel::operator=(const SemiMarkovModel& other) {
  if (this != &other) {
    SemiMarkovModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void SemiMarkovModel::build_successors() {
  const std::size_t k = names_.size();
  successors_.assign(k, {});
  for (StateIndex i = 0; i < k; ++i) {
    double cumulative = 0.0;
    for (StateIndex j = 0; j < k; ++j) {
      const double p = kernel_[i][j];
      if (p > 0.0) {
        cumulative += p;
        const SojournDist* d = sojourns_[i][j] ? &*sojourns_[i][j] : nullptr;
        successors_[i].push_back({j, p, cumulative, d});
      }
    }
  }
  initial_cumulative_.resize(k);
  std::partial_sum(initial_.begin(), initial_.end(), initial_cumulative_.begin());
}

StateIndex SemiMarkovModel::index_of(const std::string& key) const {
  const auto it = std::find(names_.begin(), names_.end(), key);
  if (it != names_.end()) return static_cast<StateIndex>(it - names_.begin());
  std::size_t pos = 0;
  unsigned long long idx = 0;
  try {
    idx = std::stoull(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == key.size() && pos > 0 && idx < names_.size()) return idx;
  throw std::invalid_argument("unknown state '" + key + "'");
}

const SemiMarkovModel::Transition& SemiMarkovModel::sample_transition(StateIndex from,
                                                                      Stream& rng) const {
  const auto& row = successors_[from];
  if (row.empty()) {
    throw InvalidModelError("state " + names_[from] + " has no outgoing transitions");
  }
  if (row.size() == 1) return row.front();
  const double u = rng.uniform() * row.back().cumulative;
  for (const auto& tr : row) {
    if (u < tr.cumulative) return tr;
  }
  return row.back();
}

StateIndex SemiMarkovModel::sample_initial(Stream& rng) const {
  const double total = initial_cumulative_.back();
  // Degenerate initial laws consume no randomness.
  for (StateIndex i = 0; i < initial_.size(); ++i) {
    if (initial_[i] == total) return i;
  }
  const double u = rng.uniform() * total;
  for (StateIndex i = 0; i < initial_cumulative_.size(); ++i) {
    if (u < initial_cumulative_[i]) return i;
  }
  return initial_.size() - 1;
}

SemiMarkovModel SemiMarkovModel::with_initial(std::vector<double> initial) const {
  return SemiMarkovModel(names_, kernel_, sojourns_, std::move(initial));
}

SemiMarkovModel SemiMarkovModel::started_at(StateIndex state) const {
  std::vector<double> p(size(), 0.0);
  p.at(state) = 1.0;
  return with_initial(std::move(p));
}

nlohmann::json SemiMarkovModel::to_json() const {
  nlohmann::json sj = nlohmann::json::object();
  for (StateIndex i = 0; i < size(); ++i) {
    for (StateIndex j = 0; j < size(); ++j) {
      if (sojourns_[i][j]) sj[names_[i] + "->" + names_[j]] = sojourns_[i][j]->to_json();
    }
  }
  return {{"states", names_}, {"P", kernel_}, {"sojourns", sj}, {"initial", initial_}};
}

SemiMarkovModel SemiMarkovModel::from_json(const nlohmann::json& j) {
  auto names = j.at("states").get<std::vector<std::string>>();
  auto kernel = j.at("P").get<Kernel>();
  const std::size_t k = names.size();
  std::vector<std::vector<std::optional<SojournDist>>> sojourns(
      k, std::vector<std::optional<SojournDist>>(k));
  std::vector<double> initial;
  if (j.contains("initial")) {
    initial = j.at("initial").get<std::vector<double>>();
  } else {
    initial.assign(k, 0.0);
    if (k > 0) initial[0] = 1.0;
  }
  // Build a shell first so that keys can be resolved by name or index.
  SemiMarkovModel shell(names, kernel, sojourns, initial);
  for (const auto& [key, value] : j.at("sojourns").items()) {
    const auto arrow = key.find("->");
    if (arrow == std::string::npos) {
      throw std::invalid_argument("sojourn key '" + key + "' is not of the form i->j");
    }
    const StateIndex from = shell.index_of(key.substr(0, arrow));
    const StateIndex to = shell.index_of(key.substr(arrow + 2));
    sojourns[from][to] = SojournDist::from_json(value);
  }
  return SemiMarkovModel(std::move(names), std::move(kernel), std::move(sojourns),
                         std::move(initial));
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& clause) const {
  for (const auto& c : checks) {
    if (c.clause == clause) return &c;
  }
  return nullptr;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"clause", c.clause}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return {{"ok", ok()}, {"checks", arr}};
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.clause;
    if (!c.detail.empty()) os << ": " << c.detail;
    os << '\n';
  }
  return os.str();
}

ValidationReport validate_model(const SemiMarkovModel& m) {
  ValidationReport report;
  const auto& p = m.kernel();
  const std::size_t k = m.size();

  {
    std::string bad;
    for (StateIndex i = 0; i < k; ++i) {
      if (p[i][i] != 0.0) bad += (bad.empty() ? "" : ", ") + m.names()[i];
    }
    report.checks.push_back(
        {"zero_diagonal", bad.empty(), bad.empty() ? "" : "nonzero P_ii at " + bad});
  }
  {
    std::string bad;
    for (StateIndex i = 0; i < k; ++i) {
      double sum = 0.0;
      bool entries_ok = true;
      for (double x : p[i]) {
        entries_ok = entries_ok && std::isfinite(x) && x >= 0.0 && x <= 1.0;
        sum += x;
      }
      if (!entries_ok || std::fabs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream os;
        os << (bad.empty() ? "" : "; ") << "row " << i << " (" << m.names()[i]
           << ") sums to " << sum;
        if (!entries_ok) os << " with entries outside [0,1]";
        bad += os.str();
      }
    }
    report.checks.push_back({"row_stochastic", bad.empty(), bad});
  }
  {
    const auto fwd = reachable_from(p, 0, false);
    const auto bwd = reachable_from(p, 0, true);
    std::string bad;
    for (StateIndex i = 0; i < k; ++i) {
      if (!fwd[i] || !bwd[i]) bad += (bad.empty() ? "" : ", ") + m.names()[i];
    }
    report.checks.push_back(
        {"irreducible", bad.empty(),
         bad.empty() ? "" : "states not communicating with " + m.names()[0] + ": " + bad});
  }
  {
    std::string bad;
    for (StateIndex i = 0; i < k; ++i) {
      for (StateIndex j = 0; j < k; ++j) {
        if (p[i][j] > 0.0 && !m.sojourn(i, j)) {
          bad += (bad.empty() ? "" : ", ") + transition_name(m, i, j);
        }
      }
    }
    report.checks.push_back(
        {"sojourns_present", bad.empty(), bad.empty() ? "" : "missing sojourn for " + bad});
  }
  {
    double sup = 0.0;
    std::string bad;
    for (StateIndex i = 0; i < k; ++i) {
      for (StateIndex j = 0; j < k; ++j) {
        if (p[i][j] > 0.0 && m.sojourn(i, j)) {
          const double mean = m.sojourn(i, j)->mean();
          if (!(mean > 0.0) || !std::isfinite(mean)) {
            bad += (bad.empty() ? "" : ", ") + transition_name(m, i, j);
          } else {
            sup = std::max(sup, mean);
          }
        }
      }
    }
    std::ostringstream os;
    if (bad.empty()) {
      os << "sup mean " << sup;
    } else {
      os << "non-finite mean at " << bad;
    }
    report.checks.push_back({"finite_sup_mean", bad.empty(), os.str()});
  }
  {
    double sum = 0.0;
    bool entries_ok = true;
    for (double x : m.initial()) {
      entries_ok = entries_ok && std::isfinite(x) && x >= 0.0;
      sum += x;
    }
    const bool ok = entries_ok && std::fabs(sum - 1.0) <= kRowSumTolerance;
    std::ostringstream os;
    if (!ok) os << "initial law sums to " << sum;
    report.checks.push_back({"initial_law", ok, os.str()});
  }
  return report;
}

void require_valid(const SemiMarkovModel& model) {
  const auto report = validate_model(model);
  if (!report.ok()) throw InvalidModelError("invalid model:\n" + report.to_text());
}

std::vector<double> stationary_embedded(const SemiMarkovModel& model, double tol,
                                        std::size_t max_iterations) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  require_valid(model);
  const std::size_t k = model.size();
  const auto& p = model.kernel();
  auto residual = [&](const std::vector<double>& mu) {
    double r = 0.0;
    for (StateIndex j = 0; j < k; ++j) {
      double s = 0.0;
      for (StateIndex i = 0; i < k; ++i) s += mu[i] * p[i][j];
      r += std::fabs(s - mu[j]);
    }
    return r;
  };

  std::vector<double> mu(k, 1.0 / static_cast<double>(k));
  if (k <= kDenseSolveLimit) {
    // (P^T - I) mu = 0 with the last equation replaced by sum(mu) = 1.
    Eigen::MatrixXd a(k, k);
    for (StateIndex i = 0; i < k; ++i) {
      for (StateIndex j = 0; j < k; ++j) a(j, i) = p[i][j] - (i == j ? 1.0 : 0.0);
    }
    a.row(k - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    const Eigen::VectorXd x = a.fullPivLu().solve(b);
    double sum = 0.0;
    for (StateIndex i = 0; i < k; ++i) {
      mu[i] = std::max(0.0, x(i));
      sum += mu[i];
    }
    for (auto& v : mu) v /= sum;
    if (residual(mu) < tol) return mu;
  }
  // Lazy chain (I + P) / 2 has the same stationary law and is aperiodic.
  std::vector<double> next(k);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (StateIndex j = 0; j < k; ++j) next[j] = 0.5 * mu[j];
    for (StateIndex i = 0; i < k; ++i) {
      for (const auto& tr : model.successors(i)) next[tr.to] += 0.5 * mu[i] * tr.probability;
    }
    mu.swap(next);
    if (it % 16 == 15 && residual(mu) < tol) return mu;
  }
  if (residual(mu) < tol) return mu;
  throw ConvergenceError("stationary_embedded did not converge within " +
                         std::to_string(max_iterations) + " iterations");
}

double mean_sojourn(const SemiMarkovModel& model, StateIndex i) {
  double m = 0.0;
  for (const auto& tr : model.successors(i)) {
    if (tr.sojourn == nullptr) {
      throw InvalidModelError("missing sojourn law out of state " + model.names()[i]);
    }
    m += tr.probability * tr.sojourn->mean();
  }
  return m;
}

std::vector<double> stationary_time(const SemiMarkovModel& model) {
  auto pi = stationary_embedded(model);
  double total = 0.0;
  for (StateIndex j = 0; j < pi.size(); ++j) {
    pi[j] *= mean_sojourn(model, j);
    total += pi[j];
  }
  for (auto& v : pi) v /= total;
  return pi;
}

double mean_cycle_length(const SemiMarkovModel& model, StateIndex j) {
  const auto mu = stationary_embedded(model);
  double total = 0.0;
  for (StateIndex k = 0; k < mu.size(); ++k) total += mu[k] * mean_sojourn(model, k);
  return total / mu.at(j);
}

Trajectory::Trajectory(std::vector<Segment> segments) {
  segments_.reserve(segments.size());
  for (const auto& s : segments) push(s.state, s.length);
}

void Trajectory::push(StateIndex state, double length) {
  if (!(length >= 0.0)) throw std::invalid_argument("segment length must be nonnegative");
  if (!segments_.empty() && segments_.back().state == state) {
    throw std::invalid_argument("consecutive segments must change state");
  }
  segments_.push_back({state, length});
  total_time_ += length;
}

StateIndex Trajectory::start_state() const {
  if (segments_.empty()) throw std::logic_error("empty trajectory has no start state");
  return segments_.front().state;
}

Trajectory sample_trajectory(const SemiMarkovModel& model, double horizon, Stream& rng,
                             std::size_t max_segments) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  require_valid(model);
  Trajectory traj;
  if (horizon == 0.0) {
    traj.push(model.sample_initial(rng), 0.0);
    return traj;
  }
  walk_environment(
      model, horizon, rng, [&](StateIndex s, double len) { traj.push(s, len); },
      max_segments);
  return traj;
}

double residual_sampler(const SemiMarkovModel& model, StateIndex j, Stream& rng) {
  const auto& row = model.successors(j);
  const double mj = mean_sojourn(model, j);
  // Successor k chosen with probability P_jk m_jk / m_j.
  const double u = rng.uniform() * mj;
  double acc = 0.0;
  const SojournDist* chosen = row.back().sojourn;
  for (const auto& tr : row) {
    acc += tr.probability * tr.sojourn->mean();
    if (u < acc) {
      chosen = tr.sojourn;
      break;
    }
  }
  return chosen->equilibrium_sample(rng);
}

Trajectory CycleDecomposition::concatenate() const {
  std::vector<Segment> all(pre_cycle.segments());
  for (const auto& c : cycles) all.insert(all.end(), c.segments().begin(), c.segments().end());
  all.insert(all.end(), residual.segments().begin(), residual.segments().end());
  return Trajectory(std::move(all));
}

CycleDecomposition decompose_cycles(const Trajectory& trajectory, StateIndex anchor) {
  CycleDecomposition out{anchor, {}, {}, {}};
  const auto& segs = trajectory.segments();
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].state == anchor) hits.push_back(i);
  }
  if (hits.empty()) {
    out.pre_cycle = trajectory;
    return out;
  }
  auto slice = [&](std::size_t from, std::size_t to) {
    return Trajectory(std::vector<Segment>(segs.begin() + static_cast<std::ptrdiff_t>(from),
                                           segs.begin() + static_cast<std::ptrdiff_t>(to)));
  };
  out.pre_cycle = slice(0, hits.front());
  for (std::size_t h = 0; h + 1 < hits.size(); ++h) {
    out.cycles.push_back(slice(hits[h], hits[h + 1]));
  }
  out.residual = slice(hits.back(), segs.size());
  return out;
}

}  // namespace smq

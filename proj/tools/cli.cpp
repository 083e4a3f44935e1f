#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smq/discrete.hpp"
#include "smq/feedback.hpp"
#include "smq/limit_law.hpp"
#include "smq/models.hpp"
#include "smq/parallel.hpp"
#include "smq/queue.hpp"
#include "smq/semi_markov.hpp"
#include "smq/stats.hpp"

namespace smq::cli {

namespace {

constexpr std::uint64_t kPilotTag = 1;
constexpr std::uint64_t kBootstrapTag = 2;

/// Options shared by every command.
struct Common {
  std::string model = "example1";
  std::string rates = "default";
  std::uint64_t seed = 1;
  std::string out = "-";
  unsigned threads = 1;
};

struct LoadedModel {
  std::optional<SemiMarkovModel> model;
  std::optional<RateMap> rates;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses JSON text, reporting syntax errors with line, column and the
// offending line.
nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, line_start = 0;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        line_start = i + 1;
      }
    }
    const std::size_t line_end = text.find('\n', line_start);
    const std::string snippet = text.substr(
        line_start, line_end == std::string::npos ? std::string::npos : line_end - line_start);
    std::ostringstream msg;
    msg << source << ":" << line << ":" << (pos - line_start + 1) << ": " << e.what() << "\n  "
        << snippet << "\n  " << std::string(pos - line_start, ' ') << "^";
    throw Error(msg.str());
  }
}

nlohmann::json load_json_arg(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    return parse_json(arg, "<inline>");
  }
  return parse_json(read_file(arg), arg);
}

LoadedModel load_model(const std::string& spec) {
  LoadedModel m;
  if (auto preset = builtin_model(spec)) {
    m.model = std::move(preset->model);
    m.rates = std::move(preset->rates);
    return m;
  }
  if (spec == "feedback") throw Error("the feedback model is only available to 'transience'");
  const auto j = load_json_arg(spec);
  try {
    m.model = SemiMarkovModel::from_json(j);
    if (j.contains("rates")) m.rates = RateMap::from_json(j.at("rates"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(spec + ": malformed model: " + e.what());
  }
  return m;
}

RateMap resolve_rates(const std::string& spec, const LoadedModel& m) {
  const std::size_t k = m.model->size();
  RateMap rates;
  if (spec == "default") {
    if (!m.rates) throw Error("model has no default rates; pass --rates");
    rates = *m.rates;
  } else if (spec.rfind("const:", 0) == 0) {
    const auto body = spec.substr(6);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw Error("--rates const:L,M expects two numbers");
    rates = RateMap::constant(k, std::stod(body.substr(0, comma)), std::stod(body.substr(comma + 1)));
  } else {
    try {
      rates = RateMap::from_json(load_json_arg(spec));
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed rates: " + std::string(e.what()));
    }
  }
  if (rates.size() != k) {
    throw Error("rates cover " + std::to_string(rates.size()) + " states, model has " +
                std::to_string(k));
  }
  return rates;
}

// Writes to --out, or to the command's stdout when it is "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot write " + path);
    }
    os_ = file_ ? file_.get() : &fallback;
    os_->precision(17);
  }
  std::ostream& stream() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

void write_json(const std::string& path, std::ostream& fallback, const nlohmann::json& j) {
  Output o(path, fallback);
  o.stream() << j.dump(2) << '\n';
}

std::vector<std::uint64_t> parse_thresholds(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const long long v = std::stoll(item);
    if (v < 0) throw Error("thresholds must be nonnegative");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw Error("no thresholds given");
  return out;
}

SamplerOptions sampler_options(const Common& c, double epsilon, std::optional<std::size_t> depth) {
  SamplerOptions o;
  o.epsilon = epsilon;
  o.depth = depth;
  o.pilot_seed = derive_seed(c.seed, kPilotTag);
  return o;
}

int cmd_validate(const Common& c, std::ostream& out) {
  auto m = load_model(c.model);
  const auto report = validate_model(*m.model);
  out << report.to_text();
  if (c.out != "-") write_json(c.out, out, report.to_json());
  return report.ok() ? 0 : 1;
}

struct SimulateArgs {
  double horizon = 100.0;
  std::size_t reps = 1;
  std::uint64_t y0 = 0;
  std::string simulator = "conditional";
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
  auto m = load_model(c.model);
  const auto rates = resolve_rates(c.rates, m);
  require_valid(*m.model);
  const bool gillespie = a.simulator == "gillespie";
  Output o(c.out, out);
  if (a.reps == 1) {
    Stream rng(c.seed, 0);
    if (gillespie) {
      simulate_gillespie(*m.model, rates, a.y0, a.horizon, rng).write_csv(o.stream());
    } else {
      const auto traj = sample_trajectory(*m.model, a.horizon, rng);
      simulate_conditional(traj, rates, a.y0, rng).write_csv(o.stream());
    }
    return 0;
  }
  std::vector<std::uint64_t> terminal(a.reps);
  parallel_for(a.reps, c.threads, [&](std::size_t i) {
    Stream rng(c.seed, i);
    if (gillespie) {
      terminal[i] = simulate_gillespie(*m.model, rates, a.y0, a.horizon, rng, {.record_jumps = false})
                        .terminal();
    } else {
      terminal[i] = conditional_terminal(*m.model, rates, a.y0, a.horizon, rng);
    }
  });
  o.stream() << "replication,count\n";
  for (std::size_t i = 0; i < terminal.size(); ++i) o.stream() << i << ',' << terminal[i] << '\n';
  return 0;
}

struct LimitArgs {
  std::size_t reps = 10000;
  double epsilon = 1e-6;
  std::optional<std::size_t> depth;
  std::optional<std::string> anchor;
  std::string hist;
  std::size_t bins = 50;
  std::string report;
};

void write_histograms(std::ostream& os, const SemiMarkovModel& model,
                      const std::vector<LimitDraw>& draws, std::size_t bins) {
  os << "state,bin,lower,upper,count\n";
  for (StateIndex j = 0; j < model.size(); ++j) {
    std::vector<double> w;
    for (const auto& d : draws) {
      if (d.state == j) w.push_back(d.w);
    }
    if (w.empty()) continue;
    const double hi = *std::max_element(w.begin(), w.end());
    const double width = hi > 0.0 ? hi / static_cast<double>(bins) : 1.0;
    std::vector<std::size_t> counts(bins, 0);
    for (double x : w) {
      const auto b = std::min(bins - 1, static_cast<std::size_t>(x / width));
      ++counts[b];
    }
    for (std::size_t b = 0; b < bins; ++b) {
      os << model.names()[j] << ',' << b << ',' << static_cast<double>(b) * width << ','
         << static_cast<double>(b + 1) * width << ',' << counts[b] << '\n';
    }
  }
}

int cmd_limit_sample(const Common& c, const LimitArgs& a, std::ostream& out) {
  auto m = load_model(c.model);
  const auto rates = resolve_rates(c.rates, m);
  LimitLawSampler sampler(*m.model, rates, sampler_options(c, a.epsilon, a.depth));
  std::vector<LimitDraw> draws;
  if (a.anchor) {
    const StateIndex j = m.model->index_of(*a.anchor);
    draws.resize(a.reps);
    parallel_for(a.reps, c.threads, [&](std::size_t i) {
      Stream rng(c.seed, i);
      const double w = sampler.sample_w(j, rng);
      draws[i] = {sample_poisson(w, rng), j, w};
    });
  } else {
    draws = sample_limit_pairs(sampler, a.reps, c.seed, c.threads);
  }
  {
    Output o(c.out, out);
    o.stream() << "state,w,poisson_count\n";
    for (const auto& d : draws) {
      o.stream() << m.model->names()[d.state] << ',' << d.w << ',' << d.count << '\n';
    }
  }
  if (!a.hist.empty()) {
    Output h(a.hist, out);
    write_histograms(h.stream(), *m.model, draws, std::max<std::size_t>(a.bins, 1));
  }
  if (!a.report.empty()) write_json(a.report, out, sampler.diagnostics_json());
  return 0;
}

struct MomentArgs {
  std::size_t order = 2;
  std::size_t pairs = 20000;
  std::size_t t_samples = 10000;
};

int cmd_moments(const Common& c, const MomentArgs& a, std::ostream& out) {
  auto m = load_model(c.model);
  const auto rates = resolve_rates(c.rates, m);
  LimitLawSampler sampler(*m.model, rates, sampler_options(c, 1e-6, std::nullopt));
  const auto table = build_moment_table(sampler, a.order, a.pairs, a.t_samples, c.seed);
  write_json(c.out, out, table.to_json(*m.model));
  return 0;
}

struct ExceedanceArgs {
  std::string thresholds = "0,1,2,3,4,5";
  std::size_t reps = 100000;
  double epsilon = 1e-6;
  std::optional<std::size_t> depth;
};

int cmd_exceedance(const Common& c, const ExceedanceArgs& a, std::ostream& out) {
  auto m = load_model(c.model);
  const auto rates = resolve_rates(c.rates, m);
  const auto thresholds = parse_thresholds(a.thresholds);
  LimitLawSampler sampler(*m.model, rates, sampler_options(c, a.epsilon, a.depth));
  std::vector<double> w(a.reps);
  parallel_for(a.reps, c.threads, [&](std::size_t i) {
    Stream rng(c.seed, i);
    w[i] = sampler.sample_w(sampler.sample_state(rng), rng);
  });
  nlohmann::json rows = nlohmann::json::array();
  for (auto t : thresholds) {
    const auto e = exceedance(w, t);
    rows.push_back({{"c", t}, {"value", e.value}, {"se", e.se}});
  }
  write_json(c.out, out, {{"replications", a.reps}, {"exceedance", rows}});
  return 0;
}

struct TransienceArgs {
  FeedbackParams params = feedback_defaults();
  double horizon = 2000.0;
  std::size_t reps = 50;
  std::size_t resamples = 2000;
  std::uint64_t y0 = 0;
};

int cmd_transience(const Common& c, const TransienceArgs& a, std::ostream& out) {
  a.params.validate();
  std::vector<double> slopes(a.reps);
  std::vector<std::vector<double>> increments(a.reps);
  parallel_for(a.reps, c.threads, [&](std::size_t i) {
    Stream rng(c.seed, i);
    const auto path = simulate_feedback(a.params, a.y0, a.horizon, rng);
    slopes[i] = growth_rate(path);
    increments[i] = cycle_increments(path);
  });
  std::vector<double> all;
  for (const auto& v : increments) all.insert(all.end(), v.begin(), v.end());
  Stream boot(derive_seed(c.seed, kBootstrapTag), 0);
  const auto ci = bootstrap_mean_ci(slopes, a.resamples, 0.95, boot);
  const double mean_slope =
      std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
  const auto p = a.params;
  nlohmann::json j = {
      {"params",
       {{"lambda", p.lambda}, {"lambda0", p.lambda0}, {"lambda1", p.lambda1}, {"q1", p.q1},
        {"q2", p.q2}, {"k", p.k}}},
      {"transient_regime", p.transient_regime()},
      {"horizon", a.horizon},
      {"replications", a.reps},
      {"growth_rate", {{"mean", mean_slope}, {"ci95", {ci.lo, ci.hi}}, {"samples", slopes}}},
      {"cycle_bound", p.lambda * (1.0 / p.lambda0 + 1.0 / p.lambda1) - 2.0 * p.k}};
  if (all.size() >= 2) {
    const auto e = mean_estimate(all);
    j["cycle_increment"] = {{"mean", e.value}, {"se", e.se}, {"cycles", all.size()}};
  }
  write_json(c.out, out, j);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--model", c.model, "builtin name, JSON file or inline JSON");
  sub->add_option("--rates", c.rates, "default | const:L,M | JSON file or inline JSON");
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--out", c.out, "output path, - for stdout");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infinite-server queues in semi-Markov environments"};
  app.require_subcommand(1);
  Common common;

  auto* validate = app.add_subcommand("validate", "check a model and report every clause");
  add_common(validate, common);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate the queue count process");
  add_common(simulate, common);
  simulate->add_option("--horizon", sim.horizon)->check(CLI::PositiveNumber);
  simulate->add_option("--reps", sim.reps)->check(CLI::PositiveNumber);
  simulate->add_option("--y0", sim.y0);
  simulate->add_option("--simulator", sim.simulator)
      ->check(CLI::IsMember({"conditional", "gillespie"}));

  LimitArgs lim;
  auto* limit = app.add_subcommand("limit-sample", "draw from the limiting mixture law");
  add_common(limit, common);
  limit->add_option("--reps", lim.reps)->check(CLI::PositiveNumber);
  limit->add_option("--epsilon", lim.epsilon)->check(CLI::PositiveNumber);
  limit->add_option("--depth", lim.depth, "fixed recursion depth")->check(CLI::PositiveNumber);
  limit->add_option("--anchor", lim.anchor, "draw W for this state only");
  limit->add_option("--hist", lim.hist, "per-state histogram CSV of W");
  limit->add_option("--bins", lim.bins);
  limit->add_option("--report", lim.report, "sampler diagnostics JSON");

  MomentArgs mom;
  auto* moments = app.add_subcommand("moments", "moment table of the limiting law");
  add_common(moments, common);
  moments->add_option("--order", mom.order)->check(CLI::Range(1, 20));
  moments->add_option("--pairs", mom.pairs, "cycles per state")->check(CLI::Range(2, 1 << 30));
  moments->add_option("--t-samples", mom.t_samples)->check(CLI::PositiveNumber);

  ExceedanceArgs exc;
  auto* exceed = app.add_subcommand("exceedance", "P[Y >= c] under the limiting law");
  add_common(exceed, common);
  exceed->add_option("--threshold", exc.thresholds, "comma separated list of c");
  exceed->add_option("--reps", exc.reps)->check(CLI::PositiveNumber);
  exceed->add_option("--epsilon", exc.epsilon)->check(CLI::PositiveNumber);
  exceed->add_option("--depth", exc.depth)->check(CLI::PositiveNumber);

  TransienceArgs tr;
  auto* transience = app.add_subcommand("transience", "growth rate of the feedback model");
  add_common(transience, common);
  transience->add_option("--horizon", tr.horizon)->check(CLI::PositiveNumber);
  transience->add_option("--reps", tr.reps)->check(CLI::Range(2, 1 << 30));
  transience->add_option("--resamples", tr.resamples)->check(CLI::PositiveNumber);
  transience->add_option("--y0", tr.y0);
  transience->add_option("--k", tr.params.k);
  transience->add_option("--lambda", tr.params.lambda);
  transience->add_option("--lambda0", tr.params.lambda0);
  transience->add_option("--lambda1", tr.params.lambda1);
  transience->add_option("--q1", tr.params.q1);
  transience->add_option("--q2", tr.params.q2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(common, out);
    if (*simulate) return cmd_simulate(common, sim, out);
    if (*limit) return cmd_limit_sample(common, lim, out);
    if (*moments) return cmd_moments(common, mom, out);
    if (*exceed) return cmd_exceedance(common, exc, out);
    if (*transience) return cmd_transience(common, tr, out);
  } catch (const InvalidModelError& e) {
    err << "invalid model: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace smq::cli

#include "smq/models.hpp"

#include <stdexcept>
#include <string>

namespace smq {

namespace {

using SojournTable = std::vector<std::vector<std::optional<SojournDist>>>;

std::vector<double> point_mass(std::size_t n, std::size_t at) {
  std::vector<double> p(n, 0.0);
  p[at] = 1.0;
  return p;
}

// Assigns the same law to every allowed transition out of each state.
SojournTable row_sojourns(const Kernel& kernel, const std::vector<SojournDist>& per_state) {
  const std::size_t n = kernel.size();
  SojournTable s(n, std::vector<std::optional<SojournDist>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (kernel[i][j] > 0.0) s[i][j] = per_state[i];
    }
  }
  return s;
}

Kernel example2_kernel(std::size_t truncation, double lambda) {
  if (truncation < 2) throw std::invalid_argument("truncation must be at least 2");
  if (!(lambda > 0.0) || lambda > 1.0) throw std::invalid_argument("lambda must lie in (0, 1]");
  Kernel p(truncation, std::vector<double>(truncation, 0.0));
  for (std::size_t i = 0; i < truncation; ++i) {
    const double up = i + 1 < truncation ? lambda / static_cast<double>(i + 1) : 0.0;
    if (i + 1 < truncation) p[i][i + 1] = up;
    p[i][0] += 1.0 - up;
  }
  return p;
}

std::vector<std::string> index_names(std::size_t n) {
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = std::to_string(i);
  return names;
}

ModelPreset example2(std::size_t truncation, double lambda, std::vector<SojournDist> laws) {
  const auto kernel = example2_kernel(truncation, lambda);
  std::vector<double> lam(truncation), mu(truncation);
  for (std::size_t i = 0; i < truncation; ++i) {
    lam[i] = 1.0 + 2.0 * static_cast<double>(i);
    mu[i] = static_cast<double>(i);
  }
  return {SemiMarkovModel(index_names(truncation), kernel, row_sojourns(kernel, laws),
                          point_mass(truncation, 0)),
          RateMap(lam, mu)};
}

}  // namespace

ModelPreset intro_ctmc(double rate01, double rate10) {
  Kernel p = {{0.0, 1.0}, {1.0, 0.0}};
  const std::vector<SojournDist> laws = {SojournDist::exponential(rate01),
                                         SojournDist::exponential(rate10)};
  return {SemiMarkovModel({"0", "1"}, p, row_sojourns(p, laws), point_mass(2, 0)),
          RateMap({1.0, 1.0}, {0.0, 1.0})};
}

ModelPreset example1() {
  constexpr std::size_t n = 11;
  Kernel p(n, std::vector<double>(n, 0.0));
  std::vector<SojournDist> laws;
  std::vector<std::string> names;
  std::vector<double> lam(n), mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    if (i == 0) {
      p[0][1] = 1.0;
    } else if (i == 10) {
      p[10][9] = 1.0;
    } else {
      p[i][i - 1] = 4.0 * x / (50.0 - x);
      p[i][i + 1] = 5.0 * (10.0 - x) / (50.0 - x);
    }
    laws.push_back(SojournDist::exponential(50.0 - x));
    names.push_back("(" + std::to_string(i) + "," + std::to_string(10 - i) + ")");
    lam[i] = x;
    mu[i] = 10.0 - x;
  }
  return {SemiMarkovModel(names, p, row_sojourns(p, laws), point_mass(n, 0)), RateMap(lam, mu)};
}

ModelPreset example2_exp(std::size_t truncation, double lambda) {
  std::vector<SojournDist> laws;
  for (std::size_t i = 0; i < truncation; ++i) {
    laws.push_back(SojournDist::exponential(3.0 * static_cast<double>(i) + 1.0));
  }
  return example2(truncation, lambda, std::move(laws));
}

ModelPreset example2_pareto(std::size_t truncation, double lambda, double alpha) {
  return example2(truncation, lambda,
                  std::vector<SojournDist>(truncation, SojournDist::shifted_pareto(alpha)));
}

FeedbackParams feedback_defaults() { return {1.0, 1.0, 10.0, 1.0, 1.0, 5}; }

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"intro_ctmc", "example1", "example2_exp",
                                                 "example2_pareto", "feedback"};
  return names;
}

std::optional<ModelPreset> builtin_model(const std::string& name) {
  if (name == "intro_ctmc") return intro_ctmc();
  if (name == "example1") return example1();
  if (name == "example2_exp") return example2_exp();
  if (name == "example2_pareto") return example2_pareto();
  return std::nullopt;
}

}  // namespace smq

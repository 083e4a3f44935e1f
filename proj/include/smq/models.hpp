#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smq/feedback.hpp"
#include "smq/queue.hpp"
#include "smq/semi_markov.hpp"

namespace smq {

/// An environment together with its default arrival and service rates.
struct ModelPreset {
  SemiMarkovModel model;
  RateMap rates;
};

/// Two-state CTMC, switching rates 0->1 = 0.001 and 1->0 = 1, with
/// lambda = 1 and mu(x) = x. Starts in state 0.
ModelPreset intro_ctmc(double rate01 = 0.001, double rate10 = 1.0);

/// Birth-death chain on {(k, 10-k)}: P_{i,i-1} = 4i/(50-i),
/// P_{i,i+1} = 5(10-i)/(50-i), sojourns Exp(50-i), lambda = i, mu = 10-i.
ModelPreset example1();

/// Chain on {0..K-1} with P_{i,i+1} = lambda/(i+1) and the remaining mass
/// sent to 0 (state K-1 always returns to 0); lambda(i) = 1+2i, mu(i) = i.
/// Sojourns Exp(3i+1).
ModelPreset example2_exp(std::size_t truncation = 20, double lambda = 1.0);
/// Same chain with ShiftedPareto(alpha) sojourns.
ModelPreset example2_pareto(std::size_t truncation = 20, double lambda = 1.0,
                            double alpha = 2.2);

/// lambda = 10, lambda0 = lambda1 = 1, q1 = q2 = 1, k = 5.
FeedbackParams feedback_defaults();

/// Names accepted by builtin_model().
const std::vector<std::string>& builtin_names();
/// Looks up a semi-Markov preset; "feedback" is not a semi-Markov model.
std::optional<ModelPreset> builtin_model(const std::string& name);

}  // namespace smq

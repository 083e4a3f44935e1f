#pragma once

#include <cstdint>
#include <vector>

#include "smq/rng.hpp"

namespace smq {

/// Exact Poisson draw: sequential inversion below mean 30, Hormann's
/// transformed rejection (PTRS) above.
std::uint64_t sample_poisson(double mean, Stream& rng);

/// Exact binomial draw: inversion while n*min(p,1-p) < 30, Hormann's
/// BTRS rejection otherwise.
std::uint64_t sample_binomial(std::uint64_t n, double p, Stream& rng);

double poisson_pmf(std::uint64_t k, double mean);

/// P[Poisson(mean) >= c]. Equals 1 for c == 0.
double poisson_upper_tail(std::uint64_t c, double mean);

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

/// Poisson pmf on {0..kmax}.
std::vector<double> poisson_pmf_table(double mean, std::uint64_t kmax);

}  // namespace smq

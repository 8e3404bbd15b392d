#pragma once

#include <cstdint>
#include <utility>

namespace ebwtpc {

/// Coverage model parameters: m reads of mean length r over a genome of
/// length n, per-base substitution rate epsilon, context length k, cluster
/// multiplicity t.
struct PoissonModel {
  double m = 0;
  double n = 0;
  double r = 0;
  double epsilon = 0;
  int k = 0;
  int t = 1;

  void validate() const;  // throws std::domain_error / std::invalid_argument
};

// Expected cluster size t * m * (r-k)/n * (1-eps)^k.
double lambda(const PoissonModel& model);

// Expected coverage m*r/n.
double lambda_prime(const PoissonModel& model);

// P(X <= z) for X ~ Poisson(mu); incremental term recurrence with
// compensated summation.
double poisson_cdf(double mu, long z);

// Two-tail acceptance band for X ~ Poisson(t*lambda): the largest lo with
// P(X < lo) <= alpha/2 and the smallest hi with P(X > hi) <= alpha/2.
// Sizes outside [lo, hi] are rejected.
std::pair<long, long> cluster_length_band(const PoissonModel& model, double alpha);
std::pair<long, long> poisson_band(double mean, double alpha);

// Lower bound on the probability that no two cluster suffixes with equal
// leftmost-error offsets carry the same error letter:
//   CDF(t*lambda, Y) * (sum_{e=0..3} C(Y,e) (1-eps)^(Y-e) eps^e c_e)^(r-k)
// with Y = ceil(t*lambda) + delta and c = {1, 1, 2/3, 2/9}.
double condition2_lower_bound(const PoissonModel& model, long delta);

// Maximum of the bound over delta in [0, 3*ceil(t*lambda)]; also reports the
// maximizing delta.
std::pair<double, long> condition2_lower_bound_max(const PoissonModel& model);

}  // namespace ebwtpc

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "batchrl/kernels.hpp"
#include "batchrl/mdp.hpp"

namespace batchrl {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double half_width() const { return (hi - lo) / 2.0; }
};

/// Wilson score interval at 95%.
Interval wilson(std::size_t successes, std::size_t trials);

/// d(p,q) for Bernoulli distributions, p,q in (0,1).
double binary_relative_entropy(double p, double q);

/// (p-q)^2 / (2 p*(1-p*)) with p* the argument farther from 1/2.
double binary_relative_entropy_bound(double p, double q);

/// P(A) + Q(A^c) >= 1/2 exp(-kl).
bool bretagnolle_huber_check(double p_event_p, double q_event_comp_q, double kl);

/// Monte Carlo frequency of S_n/n <= (1-beta) p for S_n ~ Bin(n, p).
double chernoff_coverage_test(std::size_t n, double p, double beta, std::size_t trials, std::uint64_t seed,
                              kernels::Execution ex = kernels::Execution::Parallel);

/// exp(-beta^2 n p / 2).
double chernoff_bound(std::size_t n, double p, double beta);

/// Monte Carlo frequency of p_hat >= p/2.
double chernoff_half_rate(std::size_t n, double p, std::size_t trials, std::uint64_t seed,
                          kernels::Execution ex = kernels::Execution::Parallel);

/// Exact P(Bin(n,p) <= k).
double binomial_cdf(std::size_t n, double p, std::size_t k);

struct RatioReport {
    numvec max_ratio; ///< per t, max over pairs of nu_trg / nu_unif (0/0 counts as 0)
    numvec bound;     ///< A^{min(t+1, S)}
    bool ok = true;
};

/// Compares exact t-step marginals under `target` with those under the
/// uniform policy for t = 0..t_max.
RatioReport ratio_bound_check(const Mdp& m, const Policy& target, const InitialDist& mu, std::size_t t_max);

/// Fraction of `datasets` SA-sampled datasets (uniform mu_log, n samples each)
/// in which every visited row satisfies ||p_hat - P||_1 <= beta(N(s,a), delta).
double beta_coverage_rate(const Mdp& m, std::size_t n, double delta, std::size_t datasets, std::uint64_t seed,
                          kernels::Execution ex = kernels::Execution::Parallel);

} // namespace batchrl

#include "batchrl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "batchrl/learners.hpp"
#include "batchrl/logging.hpp"
#include "batchrl/rng.hpp"

namespace batchrl {

Interval wilson(std::size_t successes, std::size_t trials) {
    if (trials == 0) throw DomainError("Wilson interval needs at least one trial");
    if (successes > trials) throw DomainError("more successes than trials");
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (phat + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

double binary_relative_entropy(double p, double q) {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) throw DomainError("arguments must lie in (0,1)");
    return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

double binary_relative_entropy_bound(double p, double q) {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) throw DomainError("arguments must lie in (0,1)");
    const double star = std::abs(p - 0.5) >= std::abs(q - 0.5) ? p : q;
    return (p - q) * (p - q) / (2.0 * star * (1.0 - star));
}

bool bretagnolle_huber_check(double p_event_p, double q_event_comp_q, double kl) {
    if (!(p_event_p >= 0.0 && p_event_p <= 1.0 && q_event_comp_q >= 0.0 && q_event_comp_q <= 1.0))
        throw DomainError("event probabilities must lie in [0,1]");
    if (!(kl >= 0.0)) throw DomainError("relative entropy must be nonnegative");
    return p_event_p + q_event_comp_q >= 0.5 * std::exp(-kl);
}

double chernoff_bound(std::size_t n, double p, double beta) {
    return std::exp(-beta * beta * static_cast<double>(n) * p / 2.0);
}

namespace {

template <class Event>
double bernoulli_frequency(std::size_t n, double p, std::size_t trials, std::uint64_t seed, kernels::Execution ex,
                           Event&& event) {
    if (trials == 0) throw DomainError("need at least one trial");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0,1]");
    std::vector<unsigned char> hit(trials, 0);
    kernels::for_each_index(ex, trials, [&](std::size_t i) {
        CounterRng rng(derive_key(seed, i));
        std::size_t k = 0;
        for (std::size_t j = 0; j < n; ++j) k += rng.bernoulli(p) ? 1 : 0;
        hit[i] = event(k) ? 1 : 0;
    });
    std::size_t count = 0;
    for (auto h : hit) count += h;
    return static_cast<double>(count) / static_cast<double>(trials);
}

} // namespace

double chernoff_coverage_test(std::size_t n, double p, double beta, std::size_t trials, std::uint64_t seed,
                              kernels::Execution ex) {
    if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("beta must lie in [0,1)");
    if (n == 0) throw DomainError("need at least one draw");
    const double cut = (1.0 - beta) * p * static_cast<double>(n);
    return bernoulli_frequency(n, p, trials, seed, ex, [&](std::size_t k) { return static_cast<double>(k) <= cut; });
}

double chernoff_half_rate(std::size_t n, double p, std::size_t trials, std::uint64_t seed, kernels::Execution ex) {
    if (n == 0) throw DomainError("need at least one draw");
    const double cut = p / 2.0 * static_cast<double>(n);
    return bernoulli_frequency(n, p, trials, seed, ex, [&](std::size_t k) { return static_cast<double>(k) >= cut; });
}

double binomial_cdf(std::size_t n, double p, std::size_t k) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0,1]");
    if (k >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    double total = 0.0;
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i <= k; ++i) {
        const double x = static_cast<double>(i);
        const double log_term = std::lgamma(nn + 1.0) - std::lgamma(x + 1.0) - std::lgamma(nn - x + 1.0) +
                                x * std::log(p) + (nn - x) * std::log1p(-p);
        total += std::exp(log_term);
    }
    return std::min(1.0, total);
}

RatioReport ratio_bound_check(const Mdp& m, const Policy& target, const InitialDist& mu, std::size_t t_max) {
    const Policy unif = uniform_policy(m.n_states, m.n_actions);
    RatioReport report;
    const double A = static_cast<double>(m.n_actions);
    for (std::size_t t = 0; t <= t_max; ++t) {
        const numvec trg = t_step_marginal(m, target, mu, t);
        const numvec log = t_step_marginal(m, unif, mu, t);
        double worst = 0.0;
        for (std::size_t i = 0; i < trg.size(); ++i) {
            if (trg[i] == 0.0) continue;
            if (log[i] == 0.0) {
                worst = std::numeric_limits<double>::infinity();
                continue;
            }
            worst = std::max(worst, trg[i] / log[i]);
        }
        const double bound = std::pow(A, static_cast<double>(std::min(t + 1, m.n_states)));
        report.max_ratio.push_back(worst);
        report.bound.push_back(bound);
        // Relative slack absorbs rounding in the propagated marginals.
        if (worst > bound * (1.0 + derived_tol)) report.ok = false;
    }
    return report;
}

double beta_coverage_rate(const Mdp& m, std::size_t n, double delta, std::size_t datasets, std::uint64_t seed,
                          kernels::Execution ex) {
    if (datasets == 0) throw DomainError("need at least one dataset");
    const numvec mu_log(m.pairs(), 1.0 / static_cast<double>(m.pairs()));
    std::vector<unsigned char> covered(datasets, 0);
    kernels::for_each_index(ex, datasets, [&](std::size_t i) {
        const Dataset d = sa_sample(m, mu_log, n, derive_key(seed, i));
        const EmpiricalModel em = fit_empirical(d, m.n_states, m.n_actions);
        bool all = true;
        for (std::size_t pair = 0; pair < m.pairs() && all; ++pair) {
            double dev = 0.0;
            for (State s2 = 0; s2 < m.n_states; ++s2)
                dev += std::abs(em.p_hat[pair * m.n_states + s2] - m.transition[pair * m.n_states + s2]);
            if (dev > beta_radius(em.counts2[pair], delta, m.n_states, m.n_actions)) all = false;
        }
        covered[i] = all ? 1 : 0;
    });
    std::size_t count = 0;
    for (auto c : covered) count += c;
    return static_cast<double>(count) / static_cast<double>(datasets);
}

} // namespace batchrl

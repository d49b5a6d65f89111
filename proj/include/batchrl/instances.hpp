#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "batchrl/mdp.hpp"

namespace batchrl {

enum class Family { DiscountedLock, FiniteHorizonLock, AverageRewardLock, SaGadget };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// Where the two members differ. `transition` marks a kernel difference
/// (SA gadget); `all_actions` marks a state-level reward (average-reward lock).
struct Cell {
    State state = 0;
    Action action = 0;
    bool transition = false;
    bool all_actions = false;
};

/// Closed-form values attached to a generated pair.
struct Analytic {
    double v_plus = 0.0;
    double v_minus = 0.0;
    std::size_t chain_length = 0;
    /// Probability that one logging episode (or one SA sample) hits the distinguished cell.
    double reach_prob = 0.0;
    double gamma = 0.0;

    // SA gadget only.
    double gamma0 = 0.0;
    double b = 0.0;
    double p0 = 0.0;
    double p1 = 0.0;
    double p_bar = 0.0;
    State loop_state = 0;
    /// 1/(1 - gamma P(s'|s',a)) for every action at s', per member.
    numvec loop_plus;
    numvec loop_minus;
    bool substituted = false;
};

struct InstancePair {
    Family family;
    Mdp m_plus;
    Mdp m_minus;
    Criterion criterion;
    InitialDist mu;
    double eps;
    Cell distinguished;
    Analytic analytic;
    /// Logging policy used by the construction (locks) and mu_log (SA gadget).
    Policy pi_log;
    numvec mu_log;
    double p = 0.0; // average-reward lock exit probability

    const Mdp& member(bool plus) const { return plus ? m_plus : m_minus; }
    std::size_t n_states() const { return m_plus.n_states; }
    std::size_t n_actions() const { return m_plus.n_actions; }
};

/// Chain s_0..s_H with H = min(H_{gamma,2eps}, S-2), trap z = H+1, N(+-1,1)
/// reward at (s_H, a_{s_H}).
InstancePair discounted_lock(std::size_t states, std::size_t actions, double gamma, double eps,
                             const Policy& pi_log);

/// Chain of min(horizon, S-1) states ending in a N(+-2eps,1) reward.
InstancePair finite_horizon_lock(std::size_t states, std::size_t actions, std::size_t horizon, double eps,
                                 const Policy& pi_log);

/// Chain s_0..s_{H-1} (H = S-2) whose end exits to the rewarding absorbing
/// state y with probability p and restarts otherwise.
InstancePair average_reward_lock(std::size_t states, std::size_t actions, double eps, double p,
                                 const Policy& pi_log);

/// Self-loop gadget; members differ in the loop probability of the pair
/// least covered by mu_log. m_plus uses p1, m_minus uses p0.
InstancePair sa_gadget(std::size_t states, std::size_t actions, double gamma, double gamma0, double eps,
                       std::span<const double> mu_log);

/// f(p) = gamma / (1 - gamma p).
inline double gadget_f(double gamma, double p) { return gamma / (1.0 - gamma * p); }

/// Largest eps sa_gadget accepts.
double gadget_eps_cap(double gamma, double gamma0);

struct Thresholds {
    /// Lower-bound sample size below which every learner fails with probability > delta.
    double threshold = 0.0;
    double kl_per_visit = 0.0;
    /// Expected visits to the distinguished cell per unit of data.
    double visit_rate = 0.0;
    std::string unit; // "episodes" or "samples"
    double delta = 0.0;

    double kl(double m) const { return kl_per_visit * visit_rate * m; }
    /// Le Cam failure floor 1/4 exp(-KL(m)).
    double floor(double m) const;
};

Thresholds theoretical_thresholds(const InstancePair& pair, double delta);

/// Random test MDP: each row uniform(0,1)+floor, normalised; deterministic
/// rewards uniform on [-1,1]. `sparsity` zeroes each entry with that
/// probability (a row keeps at least one entry).
Mdp random_mdp(std::size_t states, std::size_t actions, std::uint64_t seed, double sparsity = 0.0);

/// Random stationary policy with full support.
Policy random_policy(std::size_t states, std::size_t actions, std::uint64_t seed);

/// Gaussian KL between unit-variance normals.
inline double gaussian_kl(double mean1, double mean2) { return (mean1 - mean2) * (mean1 - mean2) / 2.0; }

} // namespace batchrl

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "batchrl/error.hpp"

namespace batchrl {

using State = std::size_t;
using Action = std::size_t;
using numvec = std::vector<double>;

/// Tolerance used when checking that constructed distributions sum to one.
inline constexpr double construction_tol = 1e-12;
/// Tolerance for quantities derived by accumulation (marginals, occupancies).
inline constexpr double derived_tol = 1e-10;

enum class RewardNoise { Deterministic, GaussianUnitVariance };

/// Reward distribution of a single state-action pair. Gaussian noise has unit
/// variance, hence is 1-subgaussian.
struct RewardSpec {
    double mean = 0.0;
    RewardNoise noise = RewardNoise::Deterministic;

    bool operator==(const RewardSpec&) const = default;
};

/**
 * Finite MDP with S states and A actions.
 *
 * Transition probabilities are stored densely, row (s,a) starting at
 * `(s*A + a)*S`. Nothing is validated on construction: the plug-in model
 * built from data legitimately has all-zero rows, so callers that need a
 * proper MDP run validate_mdp().
 */
struct Mdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    numvec transition;             // S*A*S
    std::vector<RewardSpec> reward; // S*A

    Mdp() = default;
    Mdp(std::size_t states, std::size_t actions);
    Mdp(std::size_t states, std::size_t actions, numvec transition, std::vector<RewardSpec> reward);

    std::size_t pairs() const { return n_states * n_actions; }
    std::size_t sa(State s, Action a) const { return s * n_actions + a; }

    double p(State s, Action a, State next) const { return transition[sa(s, a) * n_states + next]; }
    double& p(State s, Action a, State next) { return transition[sa(s, a) * n_states + next]; }

    std::span<const double> row(State s, Action a) const {
        return {transition.data() + sa(s, a) * n_states, n_states};
    }
    std::span<double> row(State s, Action a) { return {transition.data() + sa(s, a) * n_states, n_states}; }

    double r(State s, Action a) const { return reward[sa(s, a)].mean; }

    /// Mean rewards as a flat S*A vector.
    numvec reward_means() const;

    bool operator==(const Mdp&) const = default;
};

/// Throws InvalidModel describing the first violated invariant.
void validate_mdp(const Mdp& m);

/// Memoryless (stationary) or stage-indexed policy.
class Policy {
public:
    enum class Kind { Stationary, StageIndexed };

    Policy() = default;

    /// Stationary policy from a flat S*A probability table.
    static Policy stationary(std::size_t states, std::size_t actions, numvec probs);
    /// Stage-indexed policy from a flat H*S*A probability table.
    static Policy stage_indexed(std::size_t horizon, std::size_t states, std::size_t actions, numvec probs);
    static Policy deterministic(std::size_t actions, const std::vector<Action>& choice);
    static Policy deterministic_staged(std::size_t states, std::size_t actions,
                                       const std::vector<std::vector<Action>>& choice);

    Kind kind() const { return kind_; }
    bool is_stationary() const { return kind_ == Kind::Stationary; }
    std::size_t horizon() const { return horizon_; }
    std::size_t n_states() const { return states_; }
    std::size_t n_actions() const { return actions_; }

    double prob(State s, Action a) const;
    /// Stage h of a stage-indexed policy; stationary policies ignore h.
    double prob(std::size_t h, State s, Action a) const;
    std::span<const double> dist(State s) const { return dist(0, s); }
    std::span<const double> dist(std::size_t h, State s) const;

    /// Action chosen with probability one, if any.
    std::optional<Action> sure_action(std::size_t h, State s) const;
    bool is_deterministic() const;

    const numvec& probs() const { return probs_; }

    bool operator==(const Policy&) const = default;

private:
    Policy(Kind kind, std::size_t horizon, std::size_t states, std::size_t actions, numvec probs);

    Kind kind_ = Kind::Stationary;
    std::size_t horizon_ = 1;
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    numvec probs_;
};

/// Initial state distribution mu.
class InitialDist {
public:
    explicit InitialDist(numvec probs);
    static InitialDist point(State s, std::size_t states);
    static InitialDist uniform(std::size_t states);

    std::size_t size() const { return probs_.size(); }
    double operator[](State s) const { return probs_[s]; }
    const numvec& probs() const { return probs_; }

private:
    numvec probs_;
};

struct Discounted {
    double gamma;
};
struct FiniteHorizon {
    std::size_t horizon;
};
struct AverageReward {};

/// Optimality criterion; gamma must be in [0,1), horizon positive.
using Criterion = std::variant<Discounted, FiniteHorizon, AverageReward>;

void validate_criterion(const Criterion& crit);

/// floor(ln(1/eps) / ln(1/gamma)), or 0 when gamma == 0 or eps >= 1.
std::size_t effective_horizon(double gamma, double eps);

/// SA x SA matrix with entry ((s,a),(s',a')) = pi(a'|s') P(s'|s,a).
Eigen::MatrixXd policy_transition_matrix(const Mdp& m, const Policy& pi);

/// Distribution of (S_0, A_0): mu(s) pi(a|s).
numvec initial_pair_distribution(const Mdp& m, const Policy& pi, const InitialDist& mu);

/// Exact P(S_t = s, A_t = a | S_0 ~ mu) by t propagation steps.
numvec t_step_marginal(const Mdp& m, const Policy& pi, const InitialDist& mu, std::size_t t);

/// Unnormalised discounted state-action occupancy; total mass 1/(1-gamma).
numvec discounted_occupancy(const Mdp& m, const Policy& pi, const InitialDist& mu, double gamma);

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

} // namespace batchrl

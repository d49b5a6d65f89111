#pragma once

#include <cstddef>
#include <cstdint>

#include "batchrl/kernels.hpp"
#include "batchrl/mdp.hpp"

namespace batchrl {

/// Output of a planner.
struct PlanResult {
    numvec values;   ///< v per state (stage 0 for finite horizon)
    numvec q_values; ///< q per (s,a); empty under the average-reward criterion
    Policy policy;
    double opt_slack = 0.0; ///< suboptimality the planner guarantees, uniformly over states

    double value_at(const InitialDist& mu) const { return dot(mu.probs(), values); }
};

/**
 * Rectangular L1 confidence set around an empirical kernel.
 *
 * `center` holds S*A rows of length S, each summing to one or all-zero for
 * unvisited pairs; `radius` holds one L1 radius per pair.
 */
struct ConfidenceSet {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    numvec center;
    numvec radius;
    double delta = 0.0;
};

/// Exact value v^pi(mu). Discounted: linear solve; finite horizon: backward
/// recursion; average reward: absorption analysis. Each closed class of the
/// policy's chain earns its stationary reward rate; transient states average
/// these by absorption probability. Mass missing from sub-stochastic rows
/// falls into a zero-reward sink.
double evaluate_policy(const Mdp& m, const Policy& pi, const Criterion& crit, const InitialDist& mu);

/// Per-state values of a stationary policy under the discounted criterion.
numvec evaluate_discounted(const Mdp& m, const Policy& pi, double gamma);

/// Per-state gains of a stationary policy under the average-reward criterion.
numvec evaluate_average(const Mdp& m, const Policy& pi);

/// Value iteration stopping once ||v_{k+1} - v_k|| <= eps_opt (1-gamma) / (2 gamma);
/// the greedy policy is then eps_opt-optimal from every state.
PlanResult value_iteration(const Mdp& m, double gamma, double eps_opt,
                           kernels::Execution ex = kernels::Execution::Parallel);

/// Backward induction; returns a stage-indexed deterministic optimal policy.
PlanResult finite_horizon_dp(const Mdp& m, std::size_t horizon);

/// Truncated action values sum_{h<H} (gamma P^pi)^h r; horizon 0 gives zeros.
numvec h_step_q(const Mdp& m, const Policy& pi, std::size_t horizon, double gamma);

/// v_H = Pi q_H for the same truncated recursion.
numvec h_step_v(const Mdp& m, const Policy& pi, std::size_t horizon, double gamma);

/// Value iteration with the pessimistic backup over `cs`; rewards come from `m`.
PlanResult robust_value_iteration(const ConfidenceSet& cs, const Mdp& m, double gamma, double eps_opt,
                                  kernels::Execution ex = kernels::Execution::Parallel);

/// Exact optimum by enumerating deterministic policies (stationary, or
/// stage-wise for the finite-horizon criterion). Ties go to the first
/// policy in enumeration order, where state 0's action varies fastest.
PlanResult brute_force_optimal(const Mdp& m, const Criterion& crit, const InitialDist& mu);

/// Upper limit on the number of policies brute_force_optimal enumerates.
inline constexpr std::uint64_t brute_force_limit = 1'000'000;

} // namespace batchrl

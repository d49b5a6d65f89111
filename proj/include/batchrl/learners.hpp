#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "batchrl/logging.hpp"
#include "batchrl/mdp.hpp"
#include "batchrl/planning.hpp"

namespace batchrl {

/// Visit counts and the plug-in kernel estimate.
struct EmpiricalModel {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<std::uint64_t> counts3; // N(s,a,s'), S*A*S
    std::vector<std::uint64_t> counts2; // N(s,a), S*A
    /// stage_counts[h][(s,a)]: episodes whose h-th pair is (s,a); empty for SA-sampled data.
    std::vector<std::vector<std::uint64_t>> stage_counts;
    numvec p_hat;      // rows of zeros for unvisited pairs
    numvec reward_sum; // sum of observed rewards per pair

    std::uint64_t n(State s, Action a) const { return counts2[s * n_actions + a]; }

    /// Sample-mean reward per pair, 0 where unvisited.
    numvec reward_means() const;

    /// The model (P_hat, rewards) with deterministic rewards.
    Mdp model(std::span<const double> rewards) const;
};

EmpiricalModel fit_empirical(const Dataset& d, std::size_t states, std::size_t actions);

/// beta(u, delta) = 2 sqrt((S ln 2 + ln(u+ (u+1) S A / delta)) / (2 u+)), u+ = max(u, 1).
double beta_radius(std::uint64_t u, double delta, std::size_t states, std::size_t actions);

/// L1 balls of radius beta(N(s,a), delta) around the rows of P_hat.
ConfidenceSet confidence_set(const EmpiricalModel& em, double delta);

/// Plans in (P_hat, rewards): value iteration, stage-wise DP, or enumeration
/// for the average-reward criterion.
PlanResult plug_in_plan(const EmpiricalModel& em, std::span<const double> rewards, const Criterion& crit,
                        double eps_opt, const InitialDist& mu);
Policy plug_in(const EmpiricalModel& em, std::span<const double> rewards, const Criterion& crit, double eps_opt,
               const InitialDist& mu);

PlanResult pessimistic_plan(const EmpiricalModel& em, std::span<const double> rewards, double gamma, double delta,
                            double eps_opt);
Policy pessimistic(const EmpiricalModel& em, std::span<const double> rewards, double gamma, double delta,
                   double eps_opt, const InitialDist& mu);

/// Exact optimal value v*(mu).
double optimal_value(const Mdp& m, const Criterion& crit, const InitialDist& mu);

/// True iff v^pi(mu) > v*(mu) - eps.
bool soundness_check(const Mdp& m, const Policy& pi, const Criterion& crit, const InitialDist& mu, double eps);

} // namespace batchrl

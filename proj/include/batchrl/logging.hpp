#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "batchrl/kernels.hpp"
#include "batchrl/mdp.hpp"
#include "batchrl/rng.hpp"

namespace batchrl {

struct Transition {
    State state = 0;
    Action action = 0;
    double reward = 0.0;
    State next_state = 0;

    bool operator==(const Transition&) const = default;
};

/**
 * Batch of transitions. Policy-induced data keeps the episode lengths h_j;
 * episode j, step t sits at flat index sum_{j'<j} h_{j'} + t. SA-sampled
 * data has no episode structure.
 */
struct Dataset {
    std::vector<Transition> flat;
    std::vector<std::size_t> lengths;
    bool sa_sampled = false;

    std::size_t size() const { return flat.size(); }
    std::size_t n_episodes() const { return lengths.size(); }
    std::size_t episode_offset(std::size_t j) const;
    std::size_t flat_index(std::size_t j, std::size_t t) const;
    std::span<const Transition> episode(std::size_t j) const;

    bool operator==(const Dataset&) const = default;
};

Policy uniform_policy(std::size_t states, std::size_t actions);

/// Draws one reward from the pair's distribution.
double sample_reward(const RewardSpec& spec, CounterRng& rng);

/// n i.i.d. tuples with (S_i, A_i) ~ mu_log over the flat S*A index.
/// Tuple i uses the stream derive_key(seed, i).
Dataset sa_sample(const Mdp& m, std::span<const double> mu_log, std::size_t n, std::uint64_t seed,
                  kernels::Execution ex = kernels::Execution::Serial);

/// One episode per entry of `splitting`, following a stationary logging
/// policy from mu. Episode j uses the stream derive_key(seed, j).
Dataset collect_episodes(const Mdp& m, const Policy& pi_log, const InitialDist& mu,
                         std::span<const std::size_t> splitting, std::uint64_t seed,
                         kernels::Execution ex = kernels::Execution::Serial);

/// argmin_a pi_log(a|s), lowest index on ties.
Action min_action(const Policy& pi_log, State s);

/// max over u-subsets of states of prod_s max_a 1/pi_log(a|s); +inf when a
/// selected state has a zero-probability action.
double nonuniform_hardness(const Policy& pi_log, std::size_t u);

/// CSV with header episode,step,state,action,reward,next_state.
void write_dataset_csv(std::ostream& out, const Dataset& d);
Dataset read_dataset_csv(std::istream& in, bool sa_sampled);

} // namespace batchrl

#include "batchrl/learners.hpp"

#include <cmath>
#include <variant>

namespace batchrl {

numvec EmpiricalModel::reward_means() const {
    numvec out(counts2.size(), 0.0);
    for (std::size_t i = 0; i < counts2.size(); ++i)
        if (counts2[i] > 0) out[i] = reward_sum[i] / static_cast<double>(counts2[i]);
    return out;
}

Mdp EmpiricalModel::model(std::span<const double> rewards) const {
    if (rewards.size() != n_states * n_actions) throw ShapeMismatch("reward vector must have S*A entries");
    std::vector<RewardSpec> specs(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) specs[i].mean = rewards[i];
    return Mdp(n_states, n_actions, p_hat, std::move(specs));
}

EmpiricalModel fit_empirical(const Dataset& d, std::size_t states, std::size_t actions) {
    if (states == 0 || actions == 0) throw ShapeMismatch("empirical model needs at least one state and action");
    EmpiricalModel em;
    em.n_states = states;
    em.n_actions = actions;
    em.counts3.assign(states * actions * states, 0);
    em.counts2.assign(states * actions, 0);
    em.reward_sum.assign(states * actions, 0.0);

    for (const Transition& tr : d.flat) {
        if (tr.state >= states || tr.next_state >= states || tr.action >= actions)
            throw IndexOutOfRange("dataset index outside the model's state or action range");
        const std::size_t pair = tr.state * actions + tr.action;
        ++em.counts2[pair];
        ++em.counts3[pair * states + tr.next_state];
        em.reward_sum[pair] += tr.reward;
    }

    if (!d.sa_sampled) {
        std::size_t offset = 0;
        for (std::size_t len : d.lengths) {
            if (em.stage_counts.size() < len) em.stage_counts.resize(len, std::vector<std::uint64_t>(states * actions, 0));
            for (std::size_t h = 0; h < len; ++h) {
                const Transition& tr = d.flat[offset + h];
                ++em.stage_counts[h][tr.state * actions + tr.action];
            }
            offset += len;
        }
    }

    em.p_hat.assign(states * actions * states, 0.0);
    for (std::size_t pair = 0; pair < states * actions; ++pair) {
        if (em.counts2[pair] == 0) continue;
        const double n = static_cast<double>(em.counts2[pair]);
        for (State s2 = 0; s2 < states; ++s2)
            em.p_hat[pair * states + s2] = static_cast<double>(em.counts3[pair * states + s2]) / n;
    }
    return em;
}

double beta_radius(std::uint64_t u, double delta, std::size_t states, std::size_t actions) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    const double up = static_cast<double>(std::max<std::uint64_t>(u, 1));
    const double S = static_cast<double>(states), A = static_cast<double>(actions);
    const double inner = S * std::log(2.0) + std::log(up * (static_cast<double>(u) + 1.0) * S * A / delta);
    return 2.0 * std::sqrt(inner / (2.0 * up));
}

ConfidenceSet confidence_set(const EmpiricalModel& em, double delta) {
    ConfidenceSet cs{em.n_states, em.n_actions, em.p_hat, numvec(em.counts2.size()), delta};
    for (std::size_t i = 0; i < em.counts2.size(); ++i)
        cs.radius[i] = beta_radius(em.counts2[i], delta, em.n_states, em.n_actions);
    return cs;
}

PlanResult plug_in_plan(const EmpiricalModel& em, std::span<const double> rewards, const Criterion& crit,
                        double eps_opt, const InitialDist& mu) {
    validate_criterion(crit);
    const Mdp model = em.model(rewards);
    if (const auto* d = std::get_if<Discounted>(&crit)) return value_iteration(model, d->gamma, eps_opt);
    if (const auto* f = std::get_if<FiniteHorizon>(&crit)) return finite_horizon_dp(model, f->horizon);
    return brute_force_optimal(model, crit, mu);
}

Policy plug_in(const EmpiricalModel& em, std::span<const double> rewards, const Criterion& crit, double eps_opt,
               const InitialDist& mu) {
    return plug_in_plan(em, rewards, crit, eps_opt, mu).policy;
}

PlanResult pessimistic_plan(const EmpiricalModel& em, std::span<const double> rewards, double gamma, double delta,
                            double eps_opt) {
    return robust_value_iteration(confidence_set(em, delta), em.model(rewards), gamma, eps_opt);
}

Policy pessimistic(const EmpiricalModel& em, std::span<const double> rewards, double gamma, double delta,
                   double eps_opt, const InitialDist& mu) {
    if (mu.size() != em.n_states) throw ShapeMismatch("initial distribution size does not match the model");
    return pessimistic_plan(em, rewards, gamma, delta, eps_opt).policy;
}

double optimal_value(const Mdp& m, const Criterion& crit, const InitialDist& mu) {
    validate_criterion(crit);
    if (const auto* d = std::get_if<Discounted>(&crit)) {
        const PlanResult plan = value_iteration(m, d->gamma, 1e-9);
        return evaluate_policy(m, plan.policy, crit, mu);
    }
    if (const auto* f = std::get_if<FiniteHorizon>(&crit)) return finite_horizon_dp(m, f->horizon).value_at(mu);
    return brute_force_optimal(m, crit, mu).value_at(mu);
}

bool soundness_check(const Mdp& m, const Policy& pi, const Criterion& crit, const InitialDist& mu, double eps) {
    return evaluate_policy(m, pi, crit, mu) > optimal_value(m, crit, mu) - eps;
}

} // namespace batchrl

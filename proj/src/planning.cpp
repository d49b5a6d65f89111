#include "batchrl/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

namespace batchrl {

namespace {

using Eigen::Index;

void check_policy_shape(const Mdp& m, const Policy& pi) {
    if (pi.n_states() != m.n_states || pi.n_actions() != m.n_actions)
        throw ShapeMismatch("policy shape does not match the MDP");
}

/// State-to-state matrix and reward vector of a stationary policy.
void state_chain(const Mdp& m, const Policy& pi, Eigen::MatrixXd& chain, Eigen::VectorXd& reward) {
    const auto S = static_cast<Index>(m.n_states);
    chain = Eigen::MatrixXd::Zero(S, S);
    reward = Eigen::VectorXd::Zero(S);
    for (State s = 0; s < m.n_states; ++s)
        for (Action a = 0; a < m.n_actions; ++a) {
            const double w = pi.prob(s, a);
            if (w == 0.0) continue;
            reward(static_cast<Index>(s)) += w * m.r(s, a);
            for (State s2 = 0; s2 < m.n_states; ++s2)
                chain(static_cast<Index>(s), static_cast<Index>(s2)) += w * m.p(s, a, s2);
        }
}

std::uint64_t checked_power(std::uint64_t base, std::uint64_t exp) {
    std::uint64_t out = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        if (out > brute_force_limit / std::max<std::uint64_t>(base, 1) + 1)
            return std::numeric_limits<std::uint64_t>::max();
        out *= base;
    }
    return out;
}

/// Mixed-radix increment; returns false after the last combination.
bool next_choice(std::vector<Action>& digits, std::size_t radix) {
    for (auto& d : digits) {
        if (++d < radix) return true;
        d = 0;
    }
    return false;
}

} // namespace

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

numvec evaluate_discounted(const Mdp& m, const Policy& pi, double gamma) {
    check_policy_shape(m, pi);
    if (!pi.is_stationary()) throw ShapeMismatch("discounted evaluation needs a stationary policy");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("discount factor must lie in [0,1)");
    Eigen::MatrixXd chain;
    Eigen::VectorXd reward;
    state_chain(m, pi, chain, reward);
    const auto S = static_cast<Index>(m.n_states);
    const Eigen::VectorXd v = (Eigen::MatrixXd::Identity(S, S) - gamma * chain).partialPivLu().solve(reward);
    if (!v.allFinite()) throw SingularSystem("policy evaluation system could not be solved");
    return numvec(v.data(), v.data() + S);
}

numvec evaluate_average(const Mdp& m, const Policy& pi) {
    check_policy_shape(m, pi);
    if (!pi.is_stationary()) throw ShapeMismatch("average-reward evaluation needs a stationary policy");
    Eigen::MatrixXd chain;
    Eigen::VectorXd reward;
    state_chain(m, pi, chain, reward);
    const std::size_t S = m.n_states;

    // Mass missing from a row leaks into a virtual zero-gain sink, which is absorbing.
    std::vector<std::vector<State>> succ(S);
    std::vector<bool> leaks(S, false);
    for (State s = 0; s < S; ++s) {
        double total = 0.0;
        for (State s2 = 0; s2 < S; ++s2) {
            const double p = chain(static_cast<Index>(s), static_cast<Index>(s2));
            total += p;
            if (p > 0.0) succ[s].push_back(s2);
        }
        leaks[s] = total < 1.0 - construction_tol;
    }

    // reach[s][t]: t reachable from s in zero or more steps among real states.
    std::vector<std::vector<bool>> reach(S, std::vector<bool>(S, false));
    for (State s = 0; s < S; ++s) {
        std::vector<State> stack{s};
        reach[s][s] = true;
        while (!stack.empty()) {
            const State u = stack.back();
            stack.pop_back();
            for (State w : succ[u])
                if (!reach[s][w]) {
                    reach[s][w] = true;
                    stack.push_back(w);
                }
        }
    }

    // Closed classes: every reachable state reaches back and nothing leaks.
    std::vector<int> class_of(S, -1);
    std::vector<std::vector<State>> classes;
    for (State s = 0; s < S; ++s) {
        if (class_of[s] >= 0) continue;
        bool closed = true;
        std::vector<State> members;
        for (State t = 0; t < S; ++t) {
            if (!reach[s][t]) continue;
            if (!reach[t][s] || leaks[t]) closed = false;
            else members.push_back(t);
        }
        if (!closed) continue;
        for (State t : members) class_of[t] = static_cast<int>(classes.size());
        classes.push_back(std::move(members));
    }

    // Gain of a closed class is the stationary reward rate on it.
    numvec class_gain(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& members = classes[c];
        const auto n = static_cast<Index>(members.size());
        Eigen::MatrixXd system(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                system(j, i) = (i == j ? 1.0 : 0.0) -
                               chain(static_cast<Index>(members[static_cast<std::size_t>(i)]),
                                     static_cast<Index>(members[static_cast<std::size_t>(j)]));
        system.row(n - 1).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        rhs(n - 1) = 1.0;
        const Eigen::VectorXd stationary = system.partialPivLu().solve(rhs);
        if (!stationary.allFinite())
            throw UnsupportedAverageReward("stationary distribution of a closed class could not be computed");
        double g = 0.0;
        for (Index i = 0; i < n; ++i) g += stationary(i) * reward(static_cast<Index>(members[static_cast<std::size_t>(i)]));
        class_gain[c] = g;
    }

    numvec gain(S, 0.0);
    std::vector<State> transient;
    for (State s = 0; s < S; ++s) {
        if (class_of[s] >= 0) gain[s] = class_gain[static_cast<std::size_t>(class_of[s])];
        else transient.push_back(s);
    }
    if (transient.empty()) return gain;

    // Transient states average the gains of the classes they are absorbed into.
    const auto T = static_cast<Index>(transient.size());
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(T, T);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(T);
    for (Index i = 0; i < T; ++i) {
        const auto s = static_cast<Index>(transient[static_cast<std::size_t>(i)]);
        for (Index j = 0; j < T; ++j) system(i, j) -= chain(s, static_cast<Index>(transient[static_cast<std::size_t>(j)]));
        for (State k = 0; k < S; ++k)
            if (class_of[k] >= 0) rhs(i) += chain(s, static_cast<Index>(k)) * gain[k];
    }
    const Eigen::VectorXd values = system.partialPivLu().solve(rhs);
    if (!values.allFinite()) throw SingularSystem("absorption system could not be solved");
    for (Index i = 0; i < T; ++i) gain[transient[static_cast<std::size_t>(i)]] = values(i);
    return gain;
}

namespace {

numvec evaluate_finite_states(const Mdp& m, const Policy& pi, std::size_t horizon) {
    check_policy_shape(m, pi);
    if (!pi.is_stationary() && pi.horizon() < horizon)
        throw ShapeMismatch("stage-indexed policy shorter than the horizon");
    numvec next(m.n_states, 0.0), cur(m.n_states);
    for (std::size_t h = horizon; h-- > 0;) {
        for (State s = 0; s < m.n_states; ++s) {
            double acc = 0.0;
            for (Action a = 0; a < m.n_actions; ++a) {
                const double w = pi.prob(h, s, a);
                if (w == 0.0) continue;
                acc += w * (m.r(s, a) + dot(m.row(s, a), next));
            }
            cur[s] = acc;
        }
        std::swap(cur, next);
    }
    return next;
}

} // namespace

double evaluate_policy(const Mdp& m, const Policy& pi, const Criterion& crit, const InitialDist& mu) {
    validate_criterion(crit);
    if (mu.size() != m.n_states) throw ShapeMismatch("initial distribution size does not match the MDP");
    numvec values;
    if (const auto* d = std::get_if<Discounted>(&crit))
        values = evaluate_discounted(m, pi, d->gamma);
    else if (const auto* f = std::get_if<FiniteHorizon>(&crit))
        values = evaluate_finite_states(m, pi, f->horizon);
    else
        values = evaluate_average(m, pi);
    return dot(mu.probs(), values);
}

// ---------------------------------------------------------------------------
// Planners
// ---------------------------------------------------------------------------

namespace {

template <class Backup>
PlanResult iterate_to_tolerance(std::size_t states, std::size_t actions, double gamma, double eps_opt,
                                Backup&& backup) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("discount factor must lie in [0,1)");
    if (!(eps_opt > 0.0)) throw DomainError("eps_opt must be positive");
    const double stop = gamma == 0.0 ? std::numeric_limits<double>::infinity()
                                     : eps_opt * (1.0 - gamma) / (2.0 * gamma);
    numvec v(states, 0.0), v_next(states), q(states * actions);
    std::vector<Action> choice(states);
    while (true) {
        backup(v, q);
        kernels::greedy(states, actions, q, v_next, choice);
        double diff = 0.0;
        for (State s = 0; s < states; ++s) diff = std::max(diff, std::abs(v_next[s] - v[s]));
        std::swap(v, v_next);
        if (diff <= stop) break;
    }
    // Greedy with respect to the last iterate carries the eps_opt guarantee.
    backup(v, q);
    kernels::greedy(states, actions, q, v_next, choice);
    return PlanResult{std::move(v_next), std::move(q), Policy::deterministic(actions, choice), eps_opt};
}

} // namespace

PlanResult value_iteration(const Mdp& m, double gamma, double eps_opt, kernels::Execution ex) {
    return iterate_to_tolerance(m.n_states, m.n_actions, gamma, eps_opt,
                                [&](const numvec& v, numvec& q) { kernels::bellman_q(ex, m, v, gamma, q); });
}

PlanResult robust_value_iteration(const ConfidenceSet& cs, const Mdp& m, double gamma, double eps_opt,
                                  kernels::Execution ex) {
    if (cs.n_states != m.n_states || cs.n_actions != m.n_actions)
        throw ShapeMismatch("confidence set shape does not match the reward model");
    const numvec rewards = m.reward_means();
    return iterate_to_tolerance(m.n_states, m.n_actions, gamma, eps_opt, [&](const numvec& v, numvec& q) {
        kernels::robust_q(ex, cs.n_states, cs.n_actions, cs.center, cs.radius, rewards, v, gamma, q);
    });
}

PlanResult finite_horizon_dp(const Mdp& m, std::size_t horizon) {
    if (horizon == 0) throw DomainError("horizon must be positive");
    const std::size_t S = m.n_states, A = m.n_actions;
    numvec v(S, 0.0), v_next(S), q(S * A);
    std::vector<std::vector<Action>> choice(horizon, std::vector<Action>(S));
    for (std::size_t h = horizon; h-- > 0;) {
        kernels::bellman_q_serial(m, v, 1.0, q);
        kernels::greedy(S, A, q, v_next, choice[h]);
        std::swap(v, v_next);
    }
    return PlanResult{std::move(v), std::move(q), Policy::deterministic_staged(S, A, choice), 0.0};
}

numvec h_step_q(const Mdp& m, const Policy& pi, std::size_t horizon, double gamma) {
    check_policy_shape(m, pi);
    if (!pi.is_stationary()) throw ShapeMismatch("h-step values need a stationary policy");
    numvec q(m.pairs(), 0.0), v(m.n_states);
    for (std::size_t k = 0; k < horizon; ++k) {
        for (State s = 0; s < m.n_states; ++s) v[s] = dot(pi.dist(s), std::span(q).subspan(s * m.n_actions, m.n_actions));
        kernels::bellman_q_serial(m, v, gamma, q);
    }
    return q;
}

numvec h_step_v(const Mdp& m, const Policy& pi, std::size_t horizon, double gamma) {
    const numvec q = h_step_q(m, pi, horizon, gamma);
    numvec v(m.n_states);
    for (State s = 0; s < m.n_states; ++s) v[s] = dot(pi.dist(s), std::span(q).subspan(s * m.n_actions, m.n_actions));
    return v;
}

PlanResult brute_force_optimal(const Mdp& m, const Criterion& crit, const InitialDist& mu) {
    validate_criterion(crit);
    if (mu.size() != m.n_states) throw ShapeMismatch("initial distribution size does not match the MDP");
    const std::size_t S = m.n_states, A = m.n_actions;
    constexpr double tie_tol = 1e-12;

    if (const auto* fh = std::get_if<FiniteHorizon>(&crit)) {
        const std::uint64_t per_stage = checked_power(A, S);
        const std::uint64_t total = checked_power(per_stage, fh->horizon);
        if (per_stage > brute_force_limit || total > brute_force_limit)
            throw TooLarge("too many stage-wise deterministic policies to enumerate");
        const std::size_t H = fh->horizon;
        std::vector<Action> digits(S * H, 0);
        std::vector<Action> best_digits = digits;
        double best = -std::numeric_limits<double>::infinity();
        numvec v(S), next(S);
        do {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t h = H; h-- > 0;) {
                for (State s = 0; s < S; ++s) {
                    const Action a = digits[h * S + s];
                    v[s] = m.r(s, a) + dot(m.row(s, a), next);
                }
                std::swap(v, next);
            }
            const double value = dot(mu.probs(), next);
            if (value > best + tie_tol) {
                best = value;
                best_digits = digits;
            }
        } while (next_choice(digits, A));
        std::vector<std::vector<Action>> choice(H, std::vector<Action>(S));
        for (std::size_t h = 0; h < H; ++h)
            for (State s = 0; s < S; ++s) choice[h][s] = best_digits[h * S + s];
        Policy pi = Policy::deterministic_staged(S, A, choice);
        numvec values = evaluate_finite_states(m, pi, H);
        numvec q(S * A);
        numvec after = H > 1 ? evaluate_finite_states(m, Policy::deterministic_staged(
                                                            S, A, {choice.begin() + 1, choice.end()}),
                                                        H - 1)
                             : numvec(S, 0.0);
        kernels::bellman_q_serial(m, after, 1.0, q);
        return PlanResult{std::move(values), std::move(q), std::move(pi), 0.0};
    }

    if (checked_power(A, S) > brute_force_limit) throw TooLarge("too many deterministic policies to enumerate");
    const auto* disc = std::get_if<Discounted>(&crit);
    std::vector<Action> digits(S, 0), best_digits(S, 0);
    double best = -std::numeric_limits<double>::infinity();
    numvec best_values;
    do {
        const Policy pi = Policy::deterministic(A, digits);
        numvec values = disc ? evaluate_discounted(m, pi, disc->gamma) : evaluate_average(m, pi);
        const double value = dot(mu.probs(), values);
        if (value > best + tie_tol) {
            best = value;
            best_digits = digits;
            best_values = std::move(values);
        }
    } while (next_choice(digits, A));

    numvec q;
    if (disc) {
        q.resize(S * A);
        kernels::bellman_q_serial(m, best_values, disc->gamma, q);
    }
    return PlanResult{std::move(best_values), std::move(q), Policy::deterministic(A, best_digits), 0.0};
}

} // namespace batchrl

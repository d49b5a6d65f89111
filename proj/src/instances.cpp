#include "batchrl/instances.hpp"

#include <cmath>
#include <sstream>

#include "batchrl/logging.hpp"
#include "batchrl/rng.hpp"
#include "batchrl/stats.hpp"

namespace batchrl {

std::string_view family_name(Family f) {
    switch (f) {
    case Family::DiscountedLock: return "discounted-lock";
    case Family::FiniteHorizonLock: return "fh-lock";
    case Family::AverageRewardLock: return "avg-lock";
    case Family::SaGadget: return "sa-gadget";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "discounted-lock") return Family::DiscountedLock;
    if (name == "fh-lock") return Family::FiniteHorizonLock;
    if (name == "avg-lock") return Family::AverageRewardLock;
    if (name == "sa-gadget") return Family::SaGadget;
    throw DomainError("unknown instance family '" + std::string(name) + "'");
}

namespace {

void check_lock_args(std::size_t states, std::size_t actions, std::size_t min_states, double eps,
                     const Policy& pi_log) {
    if (states < min_states) throw DomainError("too few states for this construction");
    if (actions < 2) throw DomainError("lock constructions need at least two actions");
    if (!(eps > 0.0 && eps < 0.5)) throw DomainError("eps must lie in (0, 1/2)");
    if (!pi_log.is_stationary() || pi_log.n_states() != states || pi_log.n_actions() != actions)
        throw ShapeMismatch("logging policy must be stationary with the instance's shape");
}

/// Points every action of s at `to`.
void send_all(Mdp& m, State s, State to) {
    for (Action a = 0; a < m.n_actions; ++a) m.p(s, a, to) = 1.0;
}

/// Chain link: a_s moves on to `next`, every other action falls into `trap`.
void link(Mdp& m, State s, Action key, State next, State trap) {
    for (Action a = 0; a < m.n_actions; ++a) m.p(s, a, a == key ? next : trap) = 1.0;
}

} // namespace

InstancePair discounted_lock(std::size_t states, std::size_t actions, double gamma, double eps,
                             const Policy& pi_log) {
    check_lock_args(states, actions, 3, eps, pi_log);
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("discount factor must lie in [0,1)");
    const std::size_t H = std::min(effective_horizon(gamma, 2.0 * eps), states - 2);
    const State z = H + 1;

    Mdp base(states, actions);
    double reach = 1.0;
    for (State s = 0; s < H; ++s) {
        const Action key = min_action(pi_log, s);
        link(base, s, key, s + 1, z);
        reach *= pi_log.prob(s, key);
    }
    const Action last = min_action(pi_log, H);
    reach *= pi_log.prob(H, last);
    for (State s = H; s < states; ++s) send_all(base, s, z);

    Mdp plus = base, minus = base;
    plus.reward[plus.sa(H, last)] = {1.0, RewardNoise::GaussianUnitVariance};
    minus.reward[minus.sa(H, last)] = {-1.0, RewardNoise::GaussianUnitVariance};

    Analytic an;
    an.v_plus = std::pow(gamma, static_cast<double>(H));
    an.v_minus = 0.0;
    an.chain_length = H;
    an.reach_prob = reach;
    an.gamma = gamma;
    return InstancePair{Family::DiscountedLock, std::move(plus), std::move(minus), Discounted{gamma},
                        InitialDist::point(0, states), eps, Cell{H, last, false, false}, an, pi_log, {}};
}

InstancePair finite_horizon_lock(std::size_t states, std::size_t actions, std::size_t horizon, double eps,
                                 const Policy& pi_log) {
    check_lock_args(states, actions, 2, eps, pi_log);
    if (horizon == 0) throw DomainError("horizon must be positive");
    const std::size_t L = std::min(horizon, states - 1);
    const State z = L;

    Mdp base(states, actions);
    double reach = 1.0;
    for (State s = 0; s + 1 < L; ++s) {
        const Action key = min_action(pi_log, s);
        link(base, s, key, s + 1, z);
        reach *= pi_log.prob(s, key);
    }
    const State end = L - 1;
    const Action last = min_action(pi_log, end);
    reach *= pi_log.prob(end, last);
    for (State s = end; s < states; ++s) send_all(base, s, z);

    Mdp plus = base, minus = base;
    plus.reward[plus.sa(end, last)] = {2.0 * eps, RewardNoise::GaussianUnitVariance};
    minus.reward[minus.sa(end, last)] = {-2.0 * eps, RewardNoise::GaussianUnitVariance};

    Analytic an;
    an.v_plus = 2.0 * eps;
    an.v_minus = 0.0;
    an.chain_length = L;
    an.reach_prob = reach;
    return InstancePair{Family::FiniteHorizonLock, std::move(plus), std::move(minus), FiniteHorizon{horizon},
                        InitialDist::point(0, states), eps, Cell{end, last, false, false}, an, pi_log, {}};
}

InstancePair average_reward_lock(std::size_t states, std::size_t actions, double eps, double p,
                                 const Policy& pi_log) {
    check_lock_args(states, actions, 3, eps, pi_log);
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("exit probability must lie in (0,1]");
    const std::size_t H = states - 2;
    const State y = H, z = H + 1;

    Mdp base(states, actions);
    double reach = p;
    for (State s = 0; s + 1 < H; ++s) {
        const Action key = min_action(pi_log, s);
        link(base, s, key, s + 1, z);
        reach *= pi_log.prob(s, key);
    }
    for (Action a = 0; a < actions; ++a) {
        base.p(H - 1, a, y) += p;
        base.p(H - 1, a, 0) += 1.0 - p;
    }
    send_all(base, y, y);
    send_all(base, z, z);

    Mdp plus = base, minus = base;
    for (Action a = 0; a < actions; ++a) {
        plus.reward[plus.sa(y, a)] = {2.0 * eps, RewardNoise::GaussianUnitVariance};
        minus.reward[minus.sa(y, a)] = {-2.0 * eps, RewardNoise::GaussianUnitVariance};
    }

    Analytic an;
    an.v_plus = 2.0 * eps;
    // With a single chain state there is no way into z.
    an.v_minus = H == 1 ? -2.0 * eps : 0.0;
    an.chain_length = H;
    an.reach_prob = reach;
    InstancePair pair{Family::AverageRewardLock, std::move(plus), std::move(minus), AverageReward{},
                      InitialDist::point(0, states), eps, Cell{y, 0, false, true}, an, pi_log, {}};
    pair.p = p;
    return pair;
}

namespace {

double gadget_b(double gamma0) { return 0.5 * (1.0 + (1.0 - gamma0 / 2.0) / (1.0 - gamma0)); }

} // namespace

double gadget_eps_cap(double gamma, double gamma0) {
    const double b = gadget_b(gamma0);
    return gamma * (b - 1.0) / (8.0 * (1.0 - gamma) * b * b);
}

InstancePair sa_gadget(std::size_t states, std::size_t actions, double gamma, double gamma0, double eps,
                       std::span<const double> mu_log) {
    if (states < 3) throw DomainError("the gadget needs at least three states");
    if (actions < 2) throw DomainError("the gadget needs at least two actions");
    if (!(gamma0 > 0.0 && gamma0 < 1.0)) throw DomainError("gamma0 must lie in (0,1)");
    if (!(gamma >= gamma0 && gamma < 1.0)) throw DomainError("gamma must lie in [gamma0, 1)");
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (mu_log.size() != states * actions) throw InvalidDistribution("mu_log must cover S*A pairs");
    double total = 0.0;
    for (double x : mu_log) {
        if (!(x >= 0.0)) throw InvalidDistribution("mu_log has a negative entry");
        total += x;
    }
    if (std::abs(total - 1.0) > construction_tol) throw InvalidDistribution("mu_log does not sum to 1");

    const double cap = gadget_eps_cap(gamma, gamma0);
    if (eps > cap) {
        std::ostringstream os;
        os << "eps " << eps << " exceeds the admissible " << cap;
        throw EpsilonTooLarge(os.str());
    }

    const State s0 = 0;
    std::size_t cell = actions;
    for (std::size_t i = actions; i < mu_log.size(); ++i)
        if (mu_log[i] < mu_log[cell]) cell = i;
    double global_min = mu_log[0];
    for (double x : mu_log) global_min = std::min(global_min, x);
    const State sp = cell / actions;
    const Action ap = cell % actions;
    const State z = sp == 1 ? 2 : 1;

    const double b = gadget_b(gamma0);
    const double p0 = (1.0 - b + gamma * b) / gamma;
    const double fprime = gamma * gamma / ((1.0 - gamma) * (1.0 - gamma) * b * b);
    const double p1 = p0 + 4.0 * eps / fprime;
    const double F = (gadget_f(gamma, p0) + gadget_f(gamma, p1)) / 2.0;
    const double pbar = (1.0 - gamma / F) / gamma;
    if (!(p0 < pbar && pbar < p1 && p1 < 1.0) || gadget_f(gamma, p1) - gadget_f(gamma, pbar) < 2.0 * eps ||
        gadget_f(gamma, pbar) - gadget_f(gamma, p0) < 2.0 * eps)
        throw EpsilonTooLarge("gadget probabilities violate the construction's ordering");

    Mdp base(states, actions);
    for (State s = 0; s < states; ++s) {
        if (s == s0) {
            send_all(base, s, sp);
        } else if (s == sp) {
            for (Action a = 0; a < actions; ++a) {
                base.reward[base.sa(s, a)].mean = 1.0;
                if (a == ap) continue;
                base.p(s, a, sp) = pbar;
                base.p(s, a, z) = 1.0 - pbar;
            }
        } else {
            send_all(base, s, z);
        }
    }
    Mdp plus = base, minus = base;
    plus.p(sp, ap, sp) = p1;
    plus.p(sp, ap, z) = 1.0 - p1;
    minus.p(sp, ap, sp) = p0;
    minus.p(sp, ap, z) = 1.0 - p0;

    Analytic an;
    an.v_plus = gadget_f(gamma, p1);
    an.v_minus = gadget_f(gamma, pbar);
    an.reach_prob = mu_log[cell];
    an.gamma = gamma;
    an.gamma0 = gamma0;
    an.b = b;
    an.p0 = p0;
    an.p1 = p1;
    an.p_bar = pbar;
    an.loop_state = sp;
    an.substituted = global_min < mu_log[cell];
    for (Action a = 0; a < actions; ++a) {
        an.loop_plus.push_back(1.0 / (1.0 - gamma * plus.p(sp, a, sp)));
        an.loop_minus.push_back(1.0 / (1.0 - gamma * minus.p(sp, a, sp)));
    }
    return InstancePair{Family::SaGadget, std::move(plus), std::move(minus), Discounted{gamma},
                        InitialDist::point(s0, states), eps, Cell{sp, ap, true, false}, an, Policy{},
                        numvec(mu_log.begin(), mu_log.end())};
}

Mdp random_mdp(std::size_t states, std::size_t actions, std::uint64_t seed, double sparsity) {
    CounterRng rng(seed);
    Mdp m(states, actions);
    for (std::size_t i = 0; i < m.pairs(); ++i) {
        double* row = m.transition.data() + i * states;
        const std::size_t keep = rng() % states;
        double total = 0.0;
        for (State s2 = 0; s2 < states; ++s2) {
            const bool dropped = s2 != keep && rng.uniform() < sparsity;
            row[s2] = dropped ? 0.0 : rng.uniform() + 1e-3;
            total += row[s2];
        }
        for (State s2 = 0; s2 < states; ++s2) row[s2] /= total;
        m.reward[i].mean = 2.0 * rng.uniform() - 1.0;
    }
    return m;
}

Policy random_policy(std::size_t states, std::size_t actions, std::uint64_t seed) {
    CounterRng rng(seed);
    numvec probs(states * actions);
    for (State s = 0; s < states; ++s) {
        double total = 0.0;
        for (Action a = 0; a < actions; ++a) total += probs[s * actions + a] = rng.uniform() + 1e-3;
        for (Action a = 0; a < actions; ++a) probs[s * actions + a] /= total;
    }
    return Policy::stationary(states, actions, std::move(probs));
}

double Thresholds::floor(double m) const { return 0.25 * std::exp(-kl(m)); }

Thresholds theoretical_thresholds(const InstancePair& pair, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    Thresholds t;
    t.delta = delta;
    t.visit_rate = pair.analytic.reach_prob;
    const double log_term = std::log(1.0 / (4.0 * delta));
    switch (pair.family) {
    case Family::DiscountedLock:
        t.kl_per_visit = gaussian_kl(1.0, -1.0);
        t.unit = "episodes";
        break;
    case Family::FiniteHorizonLock:
        t.kl_per_visit = gaussian_kl(2.0 * pair.eps, -2.0 * pair.eps);
        t.unit = "episodes";
        break;
    case Family::AverageRewardLock:
        t.kl_per_visit = gaussian_kl(2.0 * pair.eps, -2.0 * pair.eps);
        t.unit = "transitions";
        break;
    case Family::SaGadget: {
        const Analytic& an = pair.analytic;
        t.kl_per_visit = binary_relative_entropy(an.p0, an.p1);
        t.unit = "samples";
        break;
    }
    }
    if (pair.family == Family::SaGadget) {
        const Analytic& an = pair.analytic;
        const double g0 = an.gamma0;
        const double c1 = g0 * g0 * g0 * (an.b - 1.0) * an.p0 / (16.0 * std::pow(an.b, 4));
        const double SA = static_cast<double>(pair.n_states() * pair.n_actions());
        t.threshold = c1 * SA * log_term / (pair.eps * pair.eps * std::pow(1.0 - an.gamma, 3));
    } else {
        t.threshold = log_term / (t.kl_per_visit * t.visit_rate);
    }
    t.threshold = std::max(0.0, t.threshold);
    return t;
}

} // namespace batchrl

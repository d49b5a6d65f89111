#include "batchrl/mdp.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace batchrl {

namespace {

void check_distribution(std::span<const double> p, const char* what) {
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw InvalidDistribution(std::string(what) + " has a negative or non-finite entry");
        total += x;
    }
    if (std::abs(total - 1.0) > construction_tol) {
        std::ostringstream os;
        os << what << " sums to " << total;
        throw InvalidDistribution(os.str());
    }
}

} // namespace

double sum(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeMismatch("dot product of vectors of different length");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

// ---------------------------------------------------------------------------
// Mdp
// ---------------------------------------------------------------------------

Mdp::Mdp(std::size_t states, std::size_t actions)
    : n_states(states), n_actions(actions), transition(states * actions * states, 0.0),
      reward(states * actions) {}

Mdp::Mdp(std::size_t states, std::size_t actions, numvec transition_, std::vector<RewardSpec> reward_)
    : n_states(states), n_actions(actions), transition(std::move(transition_)), reward(std::move(reward_)) {
    if (transition.size() != states * actions * states)
        throw ShapeMismatch("transition table must have S*A*S entries");
    if (reward.size() != states * actions) throw ShapeMismatch("reward table must have S*A entries");
}

numvec Mdp::reward_means() const {
    numvec out(reward.size());
    for (std::size_t i = 0; i < reward.size(); ++i) out[i] = reward[i].mean;
    return out;
}

void validate_mdp(const Mdp& m) {
    if (m.n_states == 0) throw InvalidModel("no states");
    if (m.n_actions == 0) throw InvalidModel("no actions");
    if (m.transition.size() != m.pairs() * m.n_states) throw InvalidModel("transition table has wrong size");
    if (m.reward.size() != m.pairs()) throw InvalidModel("reward table has wrong size");
    for (State s = 0; s < m.n_states; ++s) {
        for (Action a = 0; a < m.n_actions; ++a) {
            double total = 0.0;
            for (double x : m.row(s, a)) {
                if (!(x >= 0.0) || !std::isfinite(x)) {
                    std::ostringstream os;
                    os << "transition row (" << s << "," << a << ") has a negative or non-finite entry";
                    throw InvalidModel(os.str());
                }
                total += x;
            }
            if (std::abs(total - 1.0) > construction_tol) {
                std::ostringstream os;
                os << "transition row (" << s << "," << a << ") sums to " << total;
                throw InvalidModel(os.str());
            }
            const double mean = m.r(s, a);
            if (!(mean >= -1.0 && mean <= 1.0)) {
                std::ostringstream os;
                os << "reward mean " << mean << " at (" << s << "," << a << ") outside [-1,1]";
                throw InvalidModel(os.str());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

Policy::Policy(Kind kind, std::size_t horizon, std::size_t states, std::size_t actions, numvec probs)
    : kind_(kind), horizon_(horizon), states_(states), actions_(actions), probs_(std::move(probs)) {
    if (states == 0 || actions == 0) throw ShapeMismatch("policy needs at least one state and action");
    if (horizon == 0) throw ShapeMismatch("stage-indexed policy needs a positive horizon");
    if (probs_.size() != horizon * states * actions) throw ShapeMismatch("policy table has wrong size");
    for (std::size_t h = 0; h < horizon; ++h)
        for (State s = 0; s < states; ++s) check_distribution(dist(h, s), "policy action distribution");
}

Policy Policy::stationary(std::size_t states, std::size_t actions, numvec probs) {
    return Policy(Kind::Stationary, 1, states, actions, std::move(probs));
}

Policy Policy::stage_indexed(std::size_t horizon, std::size_t states, std::size_t actions, numvec probs) {
    return Policy(Kind::StageIndexed, horizon, states, actions, std::move(probs));
}

Policy Policy::deterministic(std::size_t actions, const std::vector<Action>& choice) {
    numvec probs(choice.size() * actions, 0.0);
    for (State s = 0; s < choice.size(); ++s) {
        if (choice[s] >= actions) throw ShapeMismatch("deterministic policy action out of range");
        probs[s * actions + choice[s]] = 1.0;
    }
    return stationary(choice.size(), actions, std::move(probs));
}

Policy Policy::deterministic_staged(std::size_t states, std::size_t actions,
                                    const std::vector<std::vector<Action>>& choice) {
    numvec probs(choice.size() * states * actions, 0.0);
    for (std::size_t h = 0; h < choice.size(); ++h) {
        if (choice[h].size() != states) throw ShapeMismatch("stage choice has wrong number of states");
        for (State s = 0; s < states; ++s) {
            if (choice[h][s] >= actions) throw ShapeMismatch("deterministic policy action out of range");
            probs[(h * states + s) * actions + choice[h][s]] = 1.0;
        }
    }
    return stage_indexed(choice.size(), states, actions, std::move(probs));
}

double Policy::prob(State s, Action a) const { return prob(0, s, a); }

double Policy::prob(std::size_t h, State s, Action a) const {
    const std::size_t stage = is_stationary() ? 0 : h;
    return probs_[(stage * states_ + s) * actions_ + a];
}

std::span<const double> Policy::dist(std::size_t h, State s) const {
    const std::size_t stage = is_stationary() ? 0 : h;
    return {probs_.data() + (stage * states_ + s) * actions_, actions_};
}

std::optional<Action> Policy::sure_action(std::size_t h, State s) const {
    const auto d = dist(h, s);
    for (Action a = 0; a < actions_; ++a)
        if (d[a] == 1.0) return a;
    return std::nullopt;
}

bool Policy::is_deterministic() const {
    for (std::size_t h = 0; h < horizon_; ++h)
        for (State s = 0; s < states_; ++s)
            if (!sure_action(h, s)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// InitialDist / Criterion
// ---------------------------------------------------------------------------

InitialDist::InitialDist(numvec probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidDistribution("initial distribution is empty");
    check_distribution(probs_, "initial distribution");
}

InitialDist InitialDist::point(State s, std::size_t states) {
    if (s >= states) throw IndexOutOfRange("initial state out of range");
    numvec p(states, 0.0);
    p[s] = 1.0;
    return InitialDist(std::move(p));
}

InitialDist InitialDist::uniform(std::size_t states) {
    return InitialDist(numvec(states, 1.0 / static_cast<double>(states)));
}

void validate_criterion(const Criterion& crit) {
    if (const auto* d = std::get_if<Discounted>(&crit)) {
        if (!(d->gamma >= 0.0 && d->gamma < 1.0)) throw DomainError("discount factor must lie in [0,1)");
    } else if (const auto* f = std::get_if<FiniteHorizon>(&crit)) {
        if (f->horizon == 0) throw DomainError("horizon must be positive");
    }
}

std::size_t effective_horizon(double gamma, double eps) {
    if (!(eps > 0.0)) throw DomainError("effective horizon needs eps > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("effective horizon needs gamma in [0,1)");
    if (gamma == 0.0 || eps >= 1.0) return 0;
    const double ratio = std::log(1.0 / eps) / std::log(1.0 / gamma);
    // Relative nudge absorbs rounding when the ratio is an exact integer, e.g. (0.9, 0.81).
    return static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12)));
}

// ---------------------------------------------------------------------------
// Distributional computations
// ---------------------------------------------------------------------------

namespace {

void check_shapes(const Mdp& m, const Policy& pi) {
    if (pi.n_states() != m.n_states || pi.n_actions() != m.n_actions)
        throw ShapeMismatch("policy shape does not match the MDP");
}

void check_shapes(const Mdp& m, const InitialDist& mu) {
    if (mu.size() != m.n_states) throw ShapeMismatch("initial distribution size does not match the MDP");
}

} // namespace

Eigen::MatrixXd policy_transition_matrix(const Mdp& m, const Policy& pi) {
    check_shapes(m, pi);
    if (!pi.is_stationary()) throw ShapeMismatch("policy transition matrix needs a stationary policy");
    const std::size_t n = m.pairs();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (State s = 0; s < m.n_states; ++s)
        for (Action a = 0; a < m.n_actions; ++a)
            for (State s2 = 0; s2 < m.n_states; ++s2) {
                const double p = m.p(s, a, s2);
                if (p == 0.0) continue;
                for (Action a2 = 0; a2 < m.n_actions; ++a2)
                    out(static_cast<Eigen::Index>(m.sa(s, a)), static_cast<Eigen::Index>(m.sa(s2, a2))) =
                        pi.prob(s2, a2) * p;
            }
    return out;
}

numvec initial_pair_distribution(const Mdp& m, const Policy& pi, const InitialDist& mu) {
    check_shapes(m, pi);
    check_shapes(m, mu);
    numvec d(m.pairs());
    for (State s = 0; s < m.n_states; ++s)
        for (Action a = 0; a < m.n_actions; ++a) d[m.sa(s, a)] = mu[s] * pi.prob(0, s, a);
    return d;
}

numvec t_step_marginal(const Mdp& m, const Policy& pi, const InitialDist& mu, std::size_t t) {
    if (!pi.is_stationary() && t >= pi.horizon()) throw ShapeMismatch("step beyond the policy's horizon");
    numvec d = initial_pair_distribution(m, pi, mu);
    numvec state_mass(m.n_states);
    for (std::size_t step = 1; step <= t; ++step) {
        std::fill(state_mass.begin(), state_mass.end(), 0.0);
        for (std::size_t i = 0; i < m.pairs(); ++i) {
            if (d[i] == 0.0) continue;
            const double* row = m.transition.data() + i * m.n_states;
            for (State s2 = 0; s2 < m.n_states; ++s2) state_mass[s2] += d[i] * row[s2];
        }
        for (State s = 0; s < m.n_states; ++s)
            for (Action a = 0; a < m.n_actions; ++a) d[m.sa(s, a)] = state_mass[s] * pi.prob(step, s, a);
    }
    return d;
}

numvec discounted_occupancy(const Mdp& m, const Policy& pi, const InitialDist& mu, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("discount factor must lie in [0,1)");
    const Eigen::MatrixXd ppi = policy_transition_matrix(m, pi);
    const numvec d0 = initial_pair_distribution(m, pi, mu);
    const auto n = static_cast<Eigen::Index>(m.pairs());
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * ppi.transpose();
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(d0.data(), n);
    const Eigen::VectorXd nu = system.partialPivLu().solve(rhs);
    if (!nu.allFinite()) throw SingularSystem("occupancy system could not be solved");
    return numvec(nu.data(), nu.data() + n);
}

} // namespace batchrl

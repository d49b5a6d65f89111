#include "batchrl/kernels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace batchrl::kernels {

namespace {

inline double bellman_entry(const Mdp& m, std::size_t i, std::span<const double> v, double gamma) {
    const double* row = m.transition.data() + i * m.n_states;
    double acc = 0.0;
    for (State s2 = 0; s2 < m.n_states; ++s2) acc += row[s2] * v[s2];
    return m.reward[i].mean + gamma * acc;
}

void check_bellman(const Mdp& m, std::span<const double> v, std::span<double> q) {
    if (v.size() != m.n_states || q.size() != m.pairs()) throw ShapeMismatch("bellman backup buffer sizes");
}

void check_robust(std::size_t states, std::size_t actions, std::span<const double> center,
                  std::span<const double> radius, std::span<const double> rewards, std::span<const double> v,
                  std::span<double> q) {
    const std::size_t pairs = states * actions;
    if (center.size() != pairs * states || radius.size() != pairs || rewards.size() != pairs ||
        v.size() != states || q.size() != pairs)
        throw ShapeMismatch("robust backup buffer sizes");
}

} // namespace

void bellman_q_serial(const Mdp& m, std::span<const double> v, double gamma, std::span<double> q) {
    check_bellman(m, v, q);
    for (std::size_t i = 0; i < m.pairs(); ++i) q[i] = bellman_entry(m, i, v, gamma);
}

void bellman_q_parallel(const Mdp& m, std::span<const double> v, double gamma, std::span<double> q) {
    check_bellman(m, v, q);
    const auto pairs = static_cast<long long>(m.pairs());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < pairs; ++i)
        q[static_cast<std::size_t>(i)] = bellman_entry(m, static_cast<std::size_t>(i), v, gamma);
}

std::vector<std::size_t> ascending_order(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return order;
}

double worst_case_l1(std::span<const double> center, double radius, std::span<const double> v,
                     std::span<const std::size_t> order) {
    const std::size_t n = v.size();
    double mass = 0.0;
    for (double c : center) mass += c;

    if (mass == 0.0) {
        if (radius >= 1.0) return std::min(0.0, v[order.front()]);
        return 0.0;
    }

    const std::size_t lo = order.front();
    const double moved = std::min(radius / 2.0, std::max(0.0, 1.0 - center[lo]));
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) value += center[i] * v[i];
    value += moved * v[lo];

    double remaining = moved;
    for (std::size_t k = n; k-- > 1 && remaining > 0.0;) {
        const std::size_t i = order[k];
        const double take = std::min(center[i], remaining);
        value -= take * v[i];
        remaining -= take;
    }
    return value;
}

numvec worst_case_l1_distribution(std::span<const double> center, double radius, std::span<const double> v) {
    const auto order = ascending_order(v);
    numvec p(center.begin(), center.end());
    const std::size_t lo = order.front();
    const double moved = std::min(radius / 2.0, std::max(0.0, 1.0 - center[lo]));
    p[lo] += moved;
    double remaining = moved;
    for (std::size_t k = order.size(); k-- > 1 && remaining > 0.0;) {
        const std::size_t i = order[k];
        const double take = std::min(p[i], remaining);
        p[i] -= take;
        remaining -= take;
    }
    return p;
}

namespace {

inline double robust_entry(std::size_t i, std::size_t states, std::span<const double> center,
                           std::span<const double> radius, std::span<const double> rewards,
                           std::span<const double> v, std::span<const std::size_t> order, double gamma) {
    return rewards[i] + gamma * worst_case_l1(center.subspan(i * states, states), radius[i], v, order);
}

} // namespace

void robust_q_serial(std::size_t states, std::size_t actions, std::span<const double> center,
                     std::span<const double> radius, std::span<const double> rewards, std::span<const double> v,
                     double gamma, std::span<double> q) {
    check_robust(states, actions, center, radius, rewards, v, q);
    const auto order = ascending_order(v);
    for (std::size_t i = 0; i < states * actions; ++i)
        q[i] = robust_entry(i, states, center, radius, rewards, v, order, gamma);
}

void robust_q_parallel(std::size_t states, std::size_t actions, std::span<const double> center,
                       std::span<const double> radius, std::span<const double> rewards, std::span<const double> v,
                       double gamma, std::span<double> q) {
    check_robust(states, actions, center, radius, rewards, v, q);
    const auto order = ascending_order(v);
    const auto pairs = static_cast<long long>(states * actions);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < pairs; ++i) {
        const auto k = static_cast<std::size_t>(i);
        q[k] = robust_entry(k, states, center, radius, rewards, v, order, gamma);
    }
}

void bellman_q(Execution ex, const Mdp& m, std::span<const double> v, double gamma, std::span<double> q) {
    if (ex == Execution::Parallel && m.transition.size() >= parallel_threshold)
        bellman_q_parallel(m, v, gamma, q);
    else
        bellman_q_serial(m, v, gamma, q);
}

void robust_q(Execution ex, std::size_t states, std::size_t actions, std::span<const double> center,
              std::span<const double> radius, std::span<const double> rewards, std::span<const double> v,
              double gamma, std::span<double> q) {
    if (ex == Execution::Parallel && center.size() >= parallel_threshold)
        robust_q_parallel(states, actions, center, radius, rewards, v, gamma, q);
    else
        robust_q_serial(states, actions, center, radius, rewards, v, gamma, q);
}

void greedy(std::size_t states, std::size_t actions, std::span<const double> q, std::span<double> v,
            std::span<Action> choice) {
    for (State s = 0; s < states; ++s) {
        Action best = 0;
        double best_q = q[s * actions];
        for (Action a = 1; a < actions; ++a) {
            if (q[s * actions + a] > best_q) {
                best_q = q[s * actions + a];
                best = a;
            }
        }
        v[s] = best_q;
        choice[s] = best;
    }
}

} // namespace batchrl::kernels

#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#include "batchrl/mdp.hpp"

namespace batchrl::kernels {

/// Selects between the OpenMP kernel and its serial reference. Both produce
/// bit-identical results; the serial path exists for testing and benchmarks.
enum class Execution { Serial, Parallel };

/// Problems with fewer S*A*S entries than this run serially under Parallel.
inline constexpr std::size_t parallel_threshold = 1u << 14;

/// q(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) v(s'). Zero rows contribute nothing.
void bellman_q_serial(const Mdp& m, std::span<const double> v, double gamma, std::span<double> q);
void bellman_q_parallel(const Mdp& m, std::span<const double> v, double gamma, std::span<double> q);

/**
 * Worst case of <p, v> over the L1 ball of the given radius around `center`.
 *
 * For a distribution centre the minimiser moves min(radius/2, 1 - c[lo]) of
 * mass onto the lowest-value state `lo`, taking it from the highest-value
 * states first. An all-zero centre (unvisited pair) is itself feasible, and
 * when radius >= 1 so is every distribution; the result is then
 * min(0, min_s v(s)).
 *
 * `order` lists state indices by ascending v (ties by index).
 */
double worst_case_l1(std::span<const double> center, double radius, std::span<const double> v,
                     std::span<const std::size_t> order);

/// Minimising distribution of worst_case_l1 for a distribution centre.
numvec worst_case_l1_distribution(std::span<const double> center, double radius, std::span<const double> v);

/// Indices of v sorted ascending, ties broken by lower index.
std::vector<std::size_t> ascending_order(std::span<const double> v);

/// Pessimistic backup: q(s,a) = r(s,a) + gamma * worst_case_l1(center(s,a), radius(s,a), v).
void robust_q_serial(std::size_t states, std::size_t actions, std::span<const double> center,
                     std::span<const double> radius, std::span<const double> rewards, std::span<const double> v,
                     double gamma, std::span<double> q);
void robust_q_parallel(std::size_t states, std::size_t actions, std::span<const double> center,
                       std::span<const double> radius, std::span<const double> rewards, std::span<const double> v,
                       double gamma, std::span<double> q);

void bellman_q(Execution ex, const Mdp& m, std::span<const double> v, double gamma, std::span<double> q);
void robust_q(Execution ex, std::size_t states, std::size_t actions, std::span<const double> center,
              std::span<const double> radius, std::span<const double> rewards, std::span<const double> v,
              double gamma, std::span<double> q);

/// v(s) = max_a q(s,a); writes the maximising action (lowest index on ties).
void greedy(std::size_t states, std::size_t actions, std::span<const double> q, std::span<double> v,
            std::span<Action> choice);

/**
 * Calls fn(i) for i in [0, n). Under Parallel the indices are distributed
 * over OpenMP threads; fn must only write to slot i of its outputs. The
 * first exception raised by any call is rethrown after the loop.
 */
template <class Fn>
void for_each_index(Execution ex, std::size_t n, Fn&& fn) {
    if (ex == Execution::Serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace batchrl::kernels

#include <gtest/gtest.h>

#include <cmath>

#include "batchrl/instances.hpp"
#include "batchrl/kernels.hpp"
#include "batchrl/logging.hpp"
#include "batchrl/planning.hpp"
#include "oracles.hpp"

using namespace batchrl;

namespace {

Mdp self_loop(double reward) {
    Mdp m(1, 1);
    m.p(0, 0, 0) = 1.0;
    m.reward[0].mean = reward;
    return m;
}

} // namespace

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

TEST(WorstCaseL1, GridExample) {
    const numvec c{1.0 / 3, 1.0 / 3, 1.0 / 3}, v{0.0, 1.0, 2.0};
    const auto order = kernels::ascending_order(v);
    EXPECT_NEAR(kernels::worst_case_l1(c, 0.4, v, order), 0.6, 1e-15);
    EXPECT_NEAR(oracle::grid_min_l1({c.begin(), c.end()}, 0.4, {v.begin(), v.end()}, 600), 0.6, 1e-9);
    const numvec p = kernels::worst_case_l1_distribution(c, 0.4, v);
    EXPECT_NEAR(p[0], 1.0 / 3 + 0.2, 1e-15);
    EXPECT_NEAR(p[2], 1.0 / 3 - 0.2, 1e-15);
}

TEST(WorstCaseL1, AgreesWithGridSearch) {
    CounterRng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        numvec c(3), v(3);
        double total = 0.0;
        for (auto& x : c) total += x = rng.uniform();
        for (auto& x : c) x /= total;
        for (auto& x : v) x = 4.0 * rng.uniform() - 2.0;
        const double radius = 2.2 * rng.uniform();
        const double fast = kernels::worst_case_l1(c, radius, v, kernels::ascending_order(v));
        const double grid = oracle::grid_min_l1({c.begin(), c.end()}, radius, {v.begin(), v.end()}, 300);
        // The grid only sees lattice points, so it can only overestimate the minimum.
        EXPECT_LE(fast, grid + 1e-12);
        EXPECT_GE(fast, grid - 0.05);
    }
}

TEST(WorstCaseL1, ZeroCentre) {
    const numvec zero(3, 0.0), v{0.5, 1.0, 2.0};
    const auto order = kernels::ascending_order(v);
    EXPECT_DOUBLE_EQ(kernels::worst_case_l1(zero, 1.2, v, order), 0.0);
    const numvec neg{-1.0, 1.0, 2.0};
    EXPECT_DOUBLE_EQ(kernels::worst_case_l1(zero, 1.2, neg, kernels::ascending_order(neg)), -1.0);
}

TEST(WorstCaseL1, MonotoneInRadius) {
    CounterRng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        numvec c(4), v(4);
        double total = 0.0;
        for (auto& x : c) total += x = rng.uniform();
        for (auto& x : c) x /= total;
        for (auto& x : v) x = rng.normal();
        const auto order = kernels::ascending_order(v);
        double prev = kernels::worst_case_l1(c, 0.0, v, order);
        EXPECT_NEAR(prev, dot(c, v), 1e-15);
        for (double r = 0.05; r <= 2.5; r += 0.05) {
            const double cur = kernels::worst_case_l1(c, r, v, order);
            EXPECT_LE(cur, prev + 1e-15);
            prev = cur;
        }
        EXPECT_NEAR(prev, *std::min_element(v.begin(), v.end()), 1e-12);
    }
}

TEST(Kernels, SerialAndParallelAgree) {
    const Mdp m = random_mdp(40, 12, 3);
    numvec v(40);
    for (State s = 0; s < 40; ++s) v[s] = std::sin(static_cast<double>(s));
    numvec q1(m.pairs()), q2(m.pairs());
    kernels::bellman_q_serial(m, v, 0.9, q1);
    kernels::bellman_q_parallel(m, v, 0.9, q2);
    EXPECT_EQ(q1, q2);

    numvec radius(m.pairs());
    for (std::size_t i = 0; i < radius.size(); ++i) radius[i] = 0.01 * static_cast<double>(i % 50);
    const numvec r = m.reward_means();
    kernels::robust_q_serial(40, 12, m.transition, radius, r, v, 0.9, q1);
    kernels::robust_q_parallel(40, 12, m.transition, radius, r, v, 0.9, q2);
    EXPECT_EQ(q1, q2);
}

TEST(Kernels, ForEachIndexRethrows) {
    EXPECT_THROW(kernels::for_each_index(kernels::Execution::Parallel, 10,
                                         [](std::size_t i) {
                                             if (i == 7) throw DomainError("boom");
                                         }),
                 DomainError);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

TEST(EvaluatePolicy, SelfLoopGeometric) {
    EXPECT_NEAR(evaluate_policy(self_loop(1.0), Policy::deterministic(1, {0}), Discounted{0.5},
                                InitialDist::point(0, 1)),
                2.0, 1e-14);
}

TEST(EvaluatePolicy, LockChainPolicy) {
    const InstancePair pair = discounted_lock(5, 2, 0.9, 0.35, uniform_policy(5, 2));
    const Policy chain = Policy::deterministic(2, std::vector<Action>(5, 0));
    EXPECT_NEAR(evaluate_policy(pair.m_plus, chain, pair.criterion, pair.mu), 0.729, 1e-12);
    EXPECT_NEAR(evaluate_policy(pair.m_minus, chain, pair.criterion, pair.mu), -0.729, 1e-12);
}

TEST(EvaluatePolicy, AverageRewardLockChain) {
    const InstancePair pair = average_reward_lock(4, 2, 0.25, 0.5, uniform_policy(4, 2));
    const Policy chain = Policy::deterministic(2, std::vector<Action>(4, 0));
    EXPECT_NEAR(evaluate_policy(pair.m_plus, chain, pair.criterion, pair.mu), 0.5, 1e-9);
}

TEST(EvaluatePolicy, DiscountedMatchesSeries) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(4, 3, seed);
        const Policy pi = random_policy(4, 3, seed + 50);
        const numvec mu(4, 0.25);
        const double exact = evaluate_policy(m, pi, Discounted{0.8}, InitialDist(mu));
        EXPECT_NEAR(exact, static_cast<double>(oracle::series_value(m, pi, 0.8, mu, 300)), 1e-10);
    }
}

TEST(EvaluatePolicy, FiniteHorizonMatchesSeries) {
    const Mdp m = random_mdp(3, 2, 8);
    const Policy pi = random_policy(3, 2, 9);
    const numvec mu{0.5, 0.25, 0.25};
    EXPECT_NEAR(evaluate_policy(m, pi, FiniteHorizon{5}, InitialDist(mu)),
                static_cast<double>(oracle::series_value(m, pi, 1.0, mu, 5)), 1e-12);
}

TEST(EvaluatePolicy, AverageMatchesCesaro) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(4, 2, seed, 0.6);
        const Policy pi = Policy::deterministic(2, {seed % 2, (seed / 2) % 2, 1, 0});
        const numvec mu(4, 0.25);
        const double exact = evaluate_policy(m, pi, AverageReward{}, InitialDist(mu));
        EXPECT_NEAR(exact, static_cast<double>(oracle::cesaro_gain(m, pi, mu, 20000)), 2e-3) << seed;
    }
}

TEST(EvaluatePolicy, AveragePeriodicClass) {
    // Two-state swap with rewards 1 and 0 has gain 1/2.
    Mdp m(2, 1);
    m.p(0, 0, 1) = 1.0;
    m.p(1, 0, 0) = 1.0;
    m.reward[0].mean = 1.0;
    EXPECT_NEAR(evaluate_policy(m, Policy::deterministic(1, {0, 0}), AverageReward{}, InitialDist::point(0, 2)), 0.5,
                1e-12);
}

TEST(EvaluatePolicy, AverageSubStochasticLeaks) {
    Mdp m(2, 1);
    m.p(0, 0, 1) = 0.5; // the other half leaks
    m.p(1, 0, 1) = 1.0;
    m.reward[1].mean = 0.8;
    EXPECT_NEAR(evaluate_policy(m, Policy::deterministic(1, {0, 0}), AverageReward{}, InitialDist::point(0, 2)), 0.4,
                1e-12);
}

// ---------------------------------------------------------------------------
// Planners
// ---------------------------------------------------------------------------

TEST(ValueIteration, OneStateGreedy) {
    Mdp m(1, 3);
    for (Action a = 0; a < 3; ++a) m.p(0, a, 0) = 1.0;
    m.reward[0].mean = 0.1;
    m.reward[1].mean = 0.7;
    m.reward[2].mean = 0.3;
    const PlanResult r = value_iteration(m, 0.9, 1e-8);
    EXPECT_EQ(r.policy.sure_action(0, 0), 1u);
    EXPECT_NEAR(r.values[0], 7.0, 1e-7);
}

TEST(ValueIteration, GammaZeroIsGreedy) {
    const Mdp m = random_mdp(3, 3, 4);
    const PlanResult r = value_iteration(m, 0.0, 1e-6);
    for (State s = 0; s < 3; ++s) {
        double best = -2.0;
        for (Action a = 0; a < 3; ++a) best = std::max(best, m.r(s, a));
        EXPECT_DOUBLE_EQ(r.values[s], best);
    }
}

TEST(ValueIteration, LockFollowsChain) {
    const InstancePair pair = discounted_lock(6, 2, 0.9, 0.35, uniform_policy(6, 2));
    const PlanResult r = value_iteration(pair.m_plus, 0.9, 1e-9);
    for (State s = 0; s <= 3; ++s) EXPECT_EQ(r.policy.sure_action(0, s), 0u);
    EXPECT_NEAR(evaluate_policy(pair.m_plus, r.policy, pair.criterion, pair.mu), 0.729, 1e-12);
}

TEST(ValueIteration, MatchesEnumeration) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t S = 1 + seed % 4, A = 1 + (seed / 4) % 3;
        const double gamma = seed % 2 ? 0.5 : 0.9;
        const Mdp m = random_mdp(S, A, seed);
        const numvec mu(S, 1.0 / static_cast<double>(S));
        const PlanResult r = value_iteration(m, gamma, 1e-6);
        const double v = evaluate_policy(m, r.policy, Discounted{gamma}, InitialDist(mu));
        const double best = static_cast<double>(oracle::enumerate_discounted(m, gamma, mu));
        EXPECT_LE(v, best + 1e-12);
        EXPECT_GE(v, best - 1e-6);
        for (double x : r.values) EXPECT_LE(std::abs(x), 1.0 / (1.0 - gamma) + 1e-12);
    }
}

TEST(ValueIteration, SerialAndParallelIdentical) {
    const Mdp m = random_mdp(50, 8, 2);
    const PlanResult a = value_iteration(m, 0.95, 1e-8, kernels::Execution::Serial);
    const PlanResult b = value_iteration(m, 0.95, 1e-8, kernels::Execution::Parallel);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.policy, b.policy);
}

TEST(FiniteHorizonDp, HorizonOneGreedy) {
    const Mdp m = random_mdp(3, 3, 21);
    const PlanResult r = finite_horizon_dp(m, 1);
    for (State s = 0; s < 3; ++s) {
        Action best = 0;
        for (Action a = 1; a < 3; ++a)
            if (m.r(s, a) > m.r(s, best)) best = a;
        EXPECT_EQ(r.policy.sure_action(0, s), best);
    }
}

TEST(FiniteHorizonDp, LockValue) {
    const InstancePair pair = finite_horizon_lock(5, 2, 3, 0.2, uniform_policy(5, 2));
    EXPECT_NEAR(finite_horizon_dp(pair.m_plus, 3).value_at(pair.mu), 0.4, 1e-12);
    EXPECT_NEAR(finite_horizon_dp(pair.m_minus, 3).value_at(pair.mu), 0.0, 1e-12);
}

TEST(FiniteHorizonDp, MatchesEnumeration) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(3, 2, seed + 300);
        const numvec mu{0.2, 0.3, 0.5};
        const PlanResult r = finite_horizon_dp(m, 4);
        EXPECT_NEAR(r.value_at(InitialDist(mu)), static_cast<double>(oracle::enumerate_finite(m, 4, mu)), 1e-9);
        EXPECT_NEAR(evaluate_policy(m, r.policy, FiniteHorizon{4}, InitialDist(mu)), r.value_at(InitialDist(mu)),
                    1e-12);
    }
}

TEST(HStepQ, HorizonOneIsReward) {
    const Mdp m = random_mdp(3, 2, 1);
    EXPECT_EQ(h_step_q(m, random_policy(3, 2, 2), 1, 0.9), m.reward_means());
    EXPECT_EQ(h_step_q(m, random_policy(3, 2, 2), 0, 0.9), numvec(6, 0.0));
}

TEST(HStepQ, ConvergesToQ) {
    const Mdp m = random_mdp(3, 2, 31);
    const Policy pi = random_policy(3, 2, 32);
    const double gamma = 0.8;
    const numvec v = evaluate_discounted(m, pi, gamma);
    numvec q(6);
    kernels::bellman_q_serial(m, v, gamma, q);
    for (std::size_t H : {5u, 20u, 60u}) {
        const numvec qh = h_step_q(m, pi, H, gamma);
        for (std::size_t i = 0; i < q.size(); ++i)
            EXPECT_LE(std::abs(qh[i] - q[i]), std::pow(gamma, static_cast<double>(H)) / (1.0 - gamma) + 1e-12);
    }
}

TEST(RobustValueIteration, ZeroRadiusIsValueIteration) {
    const Mdp m = random_mdp(4, 3, 17);
    const ConfidenceSet cs{4, 3, m.transition, numvec(12, 0.0), 0.1};
    const PlanResult a = robust_value_iteration(cs, m, 0.9, 1e-10);
    const PlanResult b = value_iteration(m, 0.9, 1e-10);
    for (State s = 0; s < 4; ++s) EXPECT_NEAR(a.values[s], b.values[s], 1e-9);
}

TEST(RobustValueIteration, HugeRadiusUsesWorstState) {
    const Mdp m = random_mdp(3, 2, 19);
    const ConfidenceSet cs{3, 2, m.transition, numvec(6, 2.0), 0.1};
    const PlanResult r = robust_value_iteration(cs, m, 0.9, 1e-10);
    const double vmin = *std::min_element(r.values.begin(), r.values.end());
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r.q_values[i], m.reward[i].mean + 0.9 * vmin, 1e-9);
}

TEST(BruteForce, SingleStateSingleAction) {
    const PlanResult r = brute_force_optimal(self_loop(0.5), Discounted{0.5}, InitialDist::point(0, 1));
    EXPECT_NEAR(r.values[0], 1.0, 1e-14);
}

TEST(BruteForce, LockMembers) {
    const InstancePair pair = discounted_lock(5, 2, 0.9, 0.35, uniform_policy(5, 2));
    const PlanResult plus = brute_force_optimal(pair.m_plus, pair.criterion, pair.mu);
    const PlanResult minus = brute_force_optimal(pair.m_minus, pair.criterion, pair.mu);
    for (State s = 0; s <= 3; ++s) EXPECT_EQ(plus.policy.sure_action(0, s), 0u);
    EXPECT_NEAR(plus.value_at(pair.mu), 0.729, 1e-12);
    EXPECT_NEAR(minus.value_at(pair.mu), 0.0, 1e-12);
}

TEST(BruteForce, MatchesValueIteration) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mdp m = random_mdp(3, 3, seed + 500);
        const InitialDist mu = InitialDist::uniform(3);
        const double bf = brute_force_optimal(m, Discounted{0.8}, mu).value_at(mu);
        const double vi = evaluate_policy(m, value_iteration(m, 0.8, 1e-10).policy, Discounted{0.8}, mu);
        EXPECT_NEAR(bf, vi, 1e-8);
    }
}

TEST(BruteForce, TooLarge) {
    const Mdp m = random_mdp(13, 3, 1);
    EXPECT_THROW(brute_force_optimal(m, Discounted{0.5}, InitialDist::uniform(13)), TooLarge);
    EXPECT_THROW(brute_force_optimal(random_mdp(4, 2, 1), FiniteHorizon{6}, InitialDist::uniform(4)), TooLarge);
}

TEST(HStepQ, ErrorDecompositionBothDirections) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(3, 2, seed + 900);
        Mdp mh = random_mdp(3, 2, seed + 901);
        mh.reward = m.reward;
        const Policy pi = random_policy(3, 2, seed + 902);
        const double gamma = 0.85;
        const std::size_t H = 1 + seed % 6;

        auto kernel = [](const Mdp& x) {
            Eigen::MatrixXd P(6, 3);
            for (std::size_t i = 0; i < 6; ++i)
                for (State s2 = 0; s2 < 3; ++s2) P(long(i), long(s2)) = x.transition[i * 3 + s2];
            return P;
        };
        Eigen::MatrixXd Pi = Eigen::MatrixXd::Zero(3, 6);
        for (State s = 0; s < 3; ++s)
            for (Action a = 0; a < 2; ++a) Pi(long(s), long(s * 2 + a)) = pi.prob(s, a);
        const Eigen::MatrixXd P = kernel(m), Ph = kernel(mh);
        auto vec = [](const numvec& x) { return Eigen::Map<const Eigen::VectorXd>(x.data(), long(x.size())).eval(); };

        auto rhs = [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Mdp& vmodel) {
            Eigen::VectorXd total = Eigen::VectorXd::Zero(6);
            Eigen::MatrixXd power = Eigen::MatrixXd::Identity(6, 6);
            const Eigen::MatrixXd Api = A * Pi;
            for (std::size_t h = 0; h < H; ++h) {
                total += gamma * power * (A - B) * vec(h_step_v(vmodel, pi, H - h - 1, gamma));
                power = gamma * power * Api;
            }
            return total;
        };
        const Eigen::VectorXd diff = vec(h_step_q(m, pi, H, gamma)) - vec(h_step_q(mh, pi, H, gamma));
        EXPECT_LE((diff - rhs(P, Ph, mh)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE((-diff - rhs(Ph, P, m)).cwiseAbs().maxCoeff(), 1e-9);
    }
}

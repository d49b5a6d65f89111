#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "batchrl/instances.hpp"
#include "batchrl/learners.hpp"
#include "batchrl/stats.hpp"
#include "oracles.hpp"

using namespace batchrl;

namespace {

Dataset sa_dataset(const std::vector<Transition>& rows) {
    Dataset d;
    d.flat = rows;
    d.sa_sampled = true;
    return d;
}

} // namespace

TEST(FitEmpirical, EmptyDataset) {
    const EmpiricalModel em = fit_empirical(Dataset{}, 3, 2);
    EXPECT_TRUE(std::all_of(em.counts3.begin(), em.counts3.end(), [](auto c) { return c == 0; }));
    EXPECT_TRUE(std::all_of(em.counts2.begin(), em.counts2.end(), [](auto c) { return c == 0; }));
    EXPECT_TRUE(std::all_of(em.p_hat.begin(), em.p_hat.end(), [](double p) { return p == 0.0; }));
    EXPECT_TRUE(em.stage_counts.empty());
}

TEST(FitEmpirical, Ratio) {
    const Dataset d = sa_dataset({{1, 0, 0.0, 2}, {1, 0, 0.0, 2}, {1, 0, 0.0, 0}, {1, 0, 0.0, 2}});
    const EmpiricalModel em = fit_empirical(d, 3, 2);
    EXPECT_EQ(em.n(1, 0), 4u);
    EXPECT_DOUBLE_EQ(em.p_hat[(1 * 2 + 0) * 3 + 2], 0.75);
    EXPECT_DOUBLE_EQ(em.p_hat[(1 * 2 + 0) * 3 + 0], 0.25);
}

TEST(FitEmpirical, RejectsOutOfRange) {
    EXPECT_THROW(fit_empirical(sa_dataset({{0, 2, 0.0, 0}}), 2, 2), IndexOutOfRange);
    EXPECT_THROW(fit_empirical(sa_dataset({{0, 0, 0.0, 5}}), 2, 2), IndexOutOfRange);
}

TEST(FitEmpirical, InvariantsOnEpisodes) {
    const Mdp m = random_mdp(4, 3, 2);
    const std::vector<std::size_t> split{5, 2, 7, 7, 1};
    const Dataset d = collect_episodes(m, uniform_policy(4, 3), InitialDist::uniform(4), split, 6);
    const EmpiricalModel em = fit_empirical(d, 4, 3);
    ASSERT_EQ(em.stage_counts.size(), 7u);
    for (std::size_t i = 0; i < 12; ++i) {
        std::uint64_t total = 0;
        for (State s2 = 0; s2 < 4; ++s2) total += em.counts3[i * 4 + s2];
        EXPECT_EQ(total, em.counts2[i]);
        const double row = std::accumulate(em.p_hat.begin() + long(i * 4), em.p_hat.begin() + long(i * 4 + 4), 0.0);
        EXPECT_NEAR(row, em.counts2[i] ? 1.0 : 0.0, 1e-12);
        for (const auto& stage : em.stage_counts) EXPECT_LE(stage[i], em.counts2[i]);
    }
    std::uint64_t first_stage = 0;
    for (auto c : em.stage_counts[0]) first_stage += c;
    EXPECT_EQ(first_stage, split.size());
}

TEST(FitEmpirical, PermutationInvariant) {
    const Mdp m = random_mdp(3, 2, 4);
    Dataset d = sa_sample(m, numvec(6, 1.0 / 6.0), 500, 1);
    const EmpiricalModel a = fit_empirical(d, 3, 2);
    std::mt19937_64 gen(3);
    std::shuffle(d.flat.begin(), d.flat.end(), gen);
    const EmpiricalModel b = fit_empirical(d, 3, 2);
    EXPECT_EQ(a.counts3, b.counts3);
    EXPECT_EQ(a.p_hat, b.p_hat);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(a.reward_sum[i], b.reward_sum[i], 1e-12);
}

TEST(BetaRadius, ZeroCountFloor) {
    for (double delta : {1e-6, 0.01, 0.1, 0.5, 0.999999})
        for (std::size_t S : {1u, 2u, 5u, 50u})
            for (std::size_t A : {1u, 3u}) EXPECT_GE(beta_radius(0, delta, S, A), 1.177);
}

TEST(BetaRadius, StrictlyDecreasing) {
    double prev = beta_radius(1, 0.1, 3, 2);
    for (std::uint64_t u = 2; u <= 1000000; ++u) {
        const double cur = beta_radius(u, 0.1, 3, 2);
        ASSERT_LT(cur, prev) << u;
        prev = cur;
    }
}

TEST(BetaRadius, HighPrecisionOracle) {
    for (std::uint64_t u : {0ull, 1ull, 7ull, 100ull, 123456ull}) {
        const double expected = static_cast<double>(oracle::beta_hp(u, oracle::hp("0.1"), 3, 2));
        EXPECT_NEAR(beta_radius(u, 0.1, 3, 2), expected, 1e-14 * expected) << u;
    }
}

TEST(BetaRadius, RejectsDelta) {
    EXPECT_THROW(beta_radius(3, 0.0, 2, 2), DomainError);
    EXPECT_THROW(beta_radius(3, 1.0, 2, 2), DomainError);
}

TEST(BetaRadius, CoverageOverRepeatedDraws) {
    const Mdp m = random_mdp(3, 2, 31);
    EXPECT_GE(beta_coverage_rate(m, 300, 0.1, 500, 8), 0.85);
}

TEST(ConfidenceSet, RadiiMatchBeta) {
    const Dataset d = sa_sample(random_mdp(2, 2, 1), numvec{0.5, 0.5, 0.0, 0.0}, 40, 2);
    const EmpiricalModel em = fit_empirical(d, 2, 2);
    const ConfidenceSet cs = confidence_set(em, 0.05);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(cs.radius[i], beta_radius(em.counts2[i], 0.05, 2, 2));
    EXPECT_EQ(cs.center, em.p_hat);
}

TEST(PlugIn, EmptyDatasetIsGreedy) {
    const Mdp m = random_mdp(4, 3, 5);
    const EmpiricalModel em = fit_empirical(Dataset{}, 4, 3);
    const numvec r = m.reward_means();
    for (const Criterion crit : {Criterion{Discounted{0.9}}, Criterion{FiniteHorizon{3}}}) {
        const Policy pi = plug_in(em, r, crit, 1e-6, InitialDist::uniform(4));
        for (std::size_t h = 0; h < pi.horizon(); ++h)
            for (State s = 0; s < 4; ++s) {
                const auto best = std::max_element(r.begin() + long(s * 3), r.begin() + long(s * 3 + 3));
                EXPECT_EQ(pi.sure_action(h, s), static_cast<Action>(best - (r.begin() + long(s * 3))));
            }
    }
}

TEST(PlugIn, ExactModelIsNearOptimal) {
    const Mdp m = random_mdp(3, 2, 6);
    EmpiricalModel em = fit_empirical(Dataset{}, 3, 2);
    em.p_hat = m.transition;
    const InitialDist mu = InitialDist::uniform(3);
    const Policy pi = plug_in(em, m.reward_means(), Discounted{0.9}, 1e-6, mu);
    const double best = static_cast<double>(oracle::enumerate_discounted(m, 0.9, mu.probs()));
    EXPECT_GE(evaluate_policy(m, pi, Discounted{0.9}, mu), best - 1e-6);
}

TEST(PlugIn, LockWithAmpleData) {
    const InstancePair pair = discounted_lock(5, 2, 0.9, 0.35, uniform_policy(5, 2));
    const std::size_t H = pair.analytic.chain_length, m = 50 * 16, trials = 200;
    ASSERT_EQ(H, 3u);
    const std::vector<std::size_t> split(m, H + 1);
    std::size_t ok = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        const Dataset d = collect_episodes(pair.m_plus, pair.pi_log, pair.mu, split, derive_key(123, k));
        const EmpiricalModel em = fit_empirical(d, 5, 2);
        const Policy pi = plug_in(em, pair.m_plus.reward_means(), pair.criterion, 1e-6, pair.mu);
        ok += soundness_check(pair.m_plus, pi, pair.criterion, pair.mu, pair.eps);
    }
    EXPECT_GE(ok, 180u);
}

TEST(PlugIn, Deterministic) {
    const Mdp m = random_mdp(4, 2, 7);
    const Dataset d = sa_sample(m, numvec(8, 0.125), 200, 3);
    const EmpiricalModel em = fit_empirical(d, 4, 2);
    const InitialDist mu = InitialDist::uniform(4);
    EXPECT_EQ(plug_in(em, em.reward_means(), Discounted{0.9}, 1e-6, mu),
              plug_in(em, em.reward_means(), Discounted{0.9}, 1e-6, mu));
    EXPECT_EQ(pessimistic(em, em.reward_means(), 0.9, 0.1, 1e-6, mu),
              pessimistic(em, em.reward_means(), 0.9, 0.1, 1e-6, mu));
}

TEST(Pessimistic, AmpleDataMatchesPlugIn) {
    const Mdp m = random_mdp(3, 2, 8);
    EmpiricalModel em = fit_empirical(Dataset{}, 3, 2);
    em.p_hat = m.transition;
    std::fill(em.counts2.begin(), em.counts2.end(), std::uint64_t(1) << 60);
    const InitialDist mu = InitialDist::uniform(3);
    EXPECT_EQ(pessimistic(em, m.reward_means(), 0.9, 0.1, 1e-9, mu),
              plug_in(em, m.reward_means(), Discounted{0.9}, 1e-9, mu));
}

TEST(Pessimistic, EmptyDatasetHandExample) {
    // Every row is unvisited, so each backup sees min(0, min_s v(s)).
    // v1 = -0.4 + 0.9 v1 gives v1 = -4; v0 = -0.2 + 0.9 v1 = -3.8.
    const EmpiricalModel em = fit_empirical(Dataset{}, 2, 2);
    const numvec r{-0.5, -0.2, -0.4, -0.9};
    const PlanResult plan = pessimistic_plan(em, r, 0.9, 0.1, 1e-10);
    EXPECT_NEAR(plan.values[0], -3.8, 1e-9);
    EXPECT_NEAR(plan.values[1], -4.0, 1e-9);
    EXPECT_EQ(plan.policy.sure_action(0, 0), 1u);
    EXPECT_EQ(plan.policy.sure_action(0, 1), 0u);

    const numvec positive{0.5, -0.2, 0.1, 0.3};
    const PlanResult p2 = pessimistic_plan(em, positive, 0.9, 0.1, 1e-10);
    EXPECT_NEAR(p2.values[0], 0.5, 1e-12);
    EXPECT_NEAR(p2.values[1], 0.3, 1e-12);
}

TEST(Pessimistic, NeverAbovePlugIn) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Mdp m = random_mdp(3, 2, seed + 40);
        const Dataset d = sa_sample(m, numvec(6, 1.0 / 6.0), 5 + seed * 10, seed);
        const EmpiricalModel em = fit_empirical(d, 3, 2);
        const InitialDist mu = InitialDist::uniform(3);
        const numvec r = m.reward_means();
        const double pess = pessimistic_plan(em, r, 0.9, 0.1, 1e-11).value_at(mu);
        const double plug = plug_in_plan(em, r, Discounted{0.9}, 1e-11, mu).value_at(mu);
        EXPECT_LE(pess, plug + 1e-10) << seed;
    }
}

TEST(SoundnessCheck, Examples) {
    const InstancePair pair = discounted_lock(5, 2, 0.9, 0.35, uniform_policy(5, 2));
    const Policy opt = value_iteration(pair.m_plus, 0.9, 1e-10).policy;
    EXPECT_TRUE(soundness_check(pair.m_plus, opt, pair.criterion, pair.mu, 1e-6));

    const Policy chain = Policy::deterministic(2, std::vector<Action>(5, 0));
    EXPECT_NEAR(evaluate_policy(pair.m_minus, chain, pair.criterion, pair.mu), -0.729, 1e-12);
    EXPECT_FALSE(soundness_check(pair.m_minus, chain, pair.criterion, pair.mu, 0.1));

    const Mdp m = random_mdp(3, 3, 9);
    const Policy any = random_policy(3, 3, 10);
    EXPECT_TRUE(soundness_check(m, any, Discounted{0.9}, InitialDist::uniform(3), 2.0 / 0.1 + 1e-9));
}

TEST(OptimalValue, AllCriteria) {
    const InstancePair d = discounted_lock(5, 2, 0.9, 0.35, uniform_policy(5, 2));
    EXPECT_NEAR(optimal_value(d.m_plus, d.criterion, d.mu), 0.729, 1e-12);
    EXPECT_NEAR(optimal_value(d.m_minus, d.criterion, d.mu), 0.0, 1e-12);
    const InstancePair f = finite_horizon_lock(5, 2, 3, 0.2, uniform_policy(5, 2));
    EXPECT_NEAR(optimal_value(f.m_plus, f.criterion, f.mu), 0.4, 1e-12);
    const InstancePair a = average_reward_lock(4, 2, 0.25, 0.5, uniform_policy(4, 2));
    EXPECT_NEAR(optimal_value(a.m_plus, a.criterion, a.mu), 0.5, 1e-9);
    EXPECT_NEAR(optimal_value(a.m_minus, a.criterion, a.mu), 0.0, 1e-9);
}

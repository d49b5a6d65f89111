#include "batchrl/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <variant>

#include "batchrl/learners.hpp"
#include "batchrl/logging.hpp"
#include "batchrl/stats.hpp"

namespace batchrl {

void ExperimentConfig::validate() const {
    if (trials == 0) throw DomainError("trials must be at least 1");
    if (m_grid.empty()) throw DomainError("m_grid must not be empty");
    for (std::size_t i = 1; i < m_grid.size(); ++i)
        if (m_grid[i] <= m_grid[i - 1]) throw DomainError("m_grid must be strictly increasing");
    if (!(learner.delta > 0.0 && learner.delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (!(learner.eps_opt > 0.0)) throw DomainError("eps_opt must be positive");
    if (eps && !(*eps > 0.0)) throw DomainError("soundness eps must be positive");
    if (logging.length == EpisodeLength::Fixed && logging.fixed_length == 0)
        throw DomainError("fixed episode length must be positive");
    if (logging.policy && logging.policy->size() != instance.states * instance.actions)
        throw ShapeMismatch("logging policy must have S*A entries");
}

InstancePair build_instance(const InstanceSpec& spec, const std::optional<numvec>& logging_policy) {
    const Policy pi_log = logging_policy ? Policy::stationary(spec.states, spec.actions, *logging_policy)
                                         : uniform_policy(spec.states, spec.actions);
    switch (spec.family) {
    case Family::DiscountedLock: return discounted_lock(spec.states, spec.actions, spec.gamma, spec.eps, pi_log);
    case Family::FiniteHorizonLock:
        return finite_horizon_lock(spec.states, spec.actions, spec.horizon, spec.eps, pi_log);
    case Family::AverageRewardLock: return average_reward_lock(spec.states, spec.actions, spec.eps, spec.p, pi_log);
    case Family::SaGadget: {
        const numvec mu_log(spec.states * spec.actions, 1.0 / static_cast<double>(spec.states * spec.actions));
        return sa_gadget(spec.states, spec.actions, spec.gamma, spec.gamma0, spec.eps, mu_log);
    }
    }
    throw DomainError("unknown instance family");
}

std::size_t episode_length(const InstancePair& pair, const LoggingSpec& logging, double eps) {
    switch (logging.length) {
    case EpisodeLength::Fixed: return logging.fixed_length;
    case EpisodeLength::Thm5: {
        const auto* d = std::get_if<Discounted>(&pair.criterion);
        if (!d) throw DomainError("the thm5 episode length needs a discounted instance");
        if (d->gamma == 0.0) return 1;
        return std::max<std::size_t>(1, effective_horizon(d->gamma, (1.0 - d->gamma) * eps / (2.0 * d->gamma)));
    }
    case EpisodeLength::Lock: break;
    }
    switch (pair.family) {
    case Family::DiscountedLock: return pair.analytic.chain_length + 1;
    case Family::FiniteHorizonLock: return std::get<FiniteHorizon>(pair.criterion).horizon;
    case Family::AverageRewardLock: return pair.analytic.chain_length + 1;
    case Family::SaGadget: return 1;
    }
    return 1;
}

TrialOutcome run_trial(const InstancePair& pair, bool plus, const LearnerSpec& learner, const LoggingSpec& logging,
                       std::size_t m, double eps, std::uint64_t seed, double v_star) {
    const Mdp& member = pair.member(plus);
    Dataset data;
    if (pair.family == Family::SaGadget) {
        data = sa_sample(member, pair.mu_log, m, seed);
    } else {
        const std::vector<std::size_t> splitting(m, episode_length(pair, logging, eps));
        data = collect_episodes(member, pair.pi_log, pair.mu, splitting, seed);
    }
    const EmpiricalModel em = fit_empirical(data, member.n_states, member.n_actions);
    const numvec rewards = learner.rewards == RewardKnowledge::Known ? member.reward_means() : em.reward_means();

    TrialOutcome out;
    if (learner.algo == Algo::PlugIn) {
        out.policy = plug_in(em, rewards, pair.criterion, learner.eps_opt, pair.mu);
    } else {
        const auto* d = std::get_if<Discounted>(&pair.criterion);
        if (!d) throw DomainError("the pessimistic learner needs a discounted instance");
        out.policy = pessimistic(em, rewards, d->gamma, learner.delta, learner.eps_opt, pair.mu);
    }
    out.value = evaluate_policy(member, out.policy, pair.criterion, pair.mu);
    out.gap = v_star - out.value;
    out.sound = out.value > v_star - eps;
    return out;
}

TrialOutcome run_trial(const InstancePair& pair, bool plus, const LearnerSpec& learner, const LoggingSpec& logging,
                       std::size_t m, double eps, std::uint64_t seed) {
    const double v_star = optimal_value(pair.member(plus), pair.criterion, pair.mu);
    return run_trial(pair, plus, learner, logging, m, eps, seed, v_star);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t point, std::size_t member, std::size_t trial) {
    return derive_key(derive_key(derive_key(master, point), member), trial);
}

std::vector<SweepRow> SweepResult::member_rows(const std::string& member) const {
    std::vector<SweepRow> out;
    for (const auto& r : rows)
        if (r.member == member) out.push_back(r);
    return out;
}

SweepResult sweep(const ExperimentConfig& cfg, kernels::Execution ex) {
    cfg.validate();
    const InstancePair pair = build_instance(cfg.instance, cfg.logging.policy);
    const double eps = cfg.eps.value_or(pair.eps);
    const Thresholds thresholds = theoretical_thresholds(pair, cfg.learner.delta);
    const double v_star[2] = {optimal_value(pair.m_plus, pair.criterion, pair.mu),
                              optimal_value(pair.m_minus, pair.criterion, pair.mu)};
    const char* names[2] = {"plus", "minus"};

    SweepResult result;
    std::vector<unsigned char> sound(2 * cfg.trials);
    numvec gap(2 * cfg.trials);
    for (std::size_t point = 0; point < cfg.m_grid.size(); ++point) {
        const std::size_t m = cfg.m_grid[point];
        kernels::for_each_index(ex, 2 * cfg.trials, [&](std::size_t i) {
            const std::size_t member = i / cfg.trials, trial = i % cfg.trials;
            const TrialOutcome o = run_trial(pair, member == 0, cfg.learner, cfg.logging, m, eps,
                                             trial_seed(cfg.master_seed, point, member, trial), v_star[member]);
            sound[i] = o.sound ? 1 : 0;
            gap[i] = o.gap;
        });

        SweepRow rows[2];
        for (std::size_t member = 0; member < 2; ++member) {
            SweepRow& row = rows[member];
            row.family = std::string(family_name(pair.family));
            row.member = names[member];
            row.states = pair.n_states();
            row.actions = pair.n_actions();
            row.horizon = pair.analytic.chain_length;
            row.gamma = pair.analytic.gamma;
            row.eps = eps;
            row.m = m;
            row.trials = cfg.trials;
            double gap_sum = 0.0;
            for (std::size_t t = 0; t < cfg.trials; ++t) {
                row.successes += sound[member * cfg.trials + t];
                gap_sum += gap[member * cfg.trials + t];
            }
            row.mean_gap = gap_sum / static_cast<double>(cfg.trials);
            row.theory_floor = thresholds.floor(static_cast<double>(m));
            row.seed = cfg.master_seed;
        }
        SweepRow worst = rows[0].successes <= rows[1].successes ? rows[0] : rows[1];
        worst.member = "worst";
        worst.mean_gap = std::max(rows[0].mean_gap, rows[1].mean_gap);
        for (SweepRow* row : {&rows[0], &rows[1], &worst}) {
            row->rate = static_cast<double>(row->successes) / static_cast<double>(row->trials);
            const Interval ci = wilson(row->successes, row->trials);
            row->ci_lo = ci.lo;
            row->ci_hi = ci.hi;
            result.rows.push_back(*row);
        }
    }
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "family,member,S,A,H,gamma,eps,m,trials,successes,rate,ci_lo,ci_hi,mean_gap,theory_floor,seed\n";
    char buf[64];
    auto real = [&](double x) -> const char* {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    };
    for (const auto& r : result.rows) {
        out << r.family << ',' << r.member << ',' << r.states << ',' << r.actions << ',' << r.horizon << ',';
        out << real(r.gamma) << ',';
        out << real(r.eps) << ',' << r.m << ',' << r.trials << ',' << r.successes << ',';
        out << real(r.rate) << ',';
        out << real(r.ci_lo) << ',';
        out << real(r.ci_hi) << ',';
        out << real(r.mean_gap) << ',';
        out << real(r.theory_floor) << ',' << r.seed << '\n';
    }
}

} // namespace batchrl

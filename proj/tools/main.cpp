#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "batchrl/harness.hpp"
#include "batchrl/instances.hpp"
#include "batchrl/io.hpp"
#include "batchrl/learners.hpp"
#include "batchrl/logging.hpp"
#include "batchrl/stats.hpp"

using namespace batchrl;

namespace {

/// Accepts either an MDP document or an instance pair (member selected by name).
Mdp load_model(const std::string& path, const std::string& member) {
    const io::json j = io::read_json_file(path);
    if (!j.contains("m_plus")) return io::mdp_from_json(j);
    if (member != "plus" && member != "minus") throw DomainError("--member must be plus or minus");
    return io::mdp_from_json(j.at(member == "plus" ? "m_plus" : "m_minus"));
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << text;
}

int gen_instance(const InstanceSpec& spec, const std::string& out) {
    emit(out, io::to_json(build_instance(spec)).dump(2) + "\n");
    return 0;
}

struct CollectArgs {
    std::string mdp, member = "plus", policy = "uniform", mu = "point:0", out;
    std::size_t episodes = 0, len = 1, sa = 0;
    std::uint64_t seed = 0;
};

int collect(const CollectArgs& a) {
    const Mdp m = load_model(a.mdp, a.member);
    Dataset d;
    if (a.sa > 0) {
        const numvec mu_log(m.pairs(), 1.0 / static_cast<double>(m.pairs()));
        d = sa_sample(m, mu_log, a.sa, a.seed);
    } else {
        const Policy pi = a.policy == "uniform" ? uniform_policy(m.n_states, m.n_actions)
                                                : io::policy_from_json(io::read_json_file(a.policy));
        const std::vector<std::size_t> splitting(a.episodes, a.len);
        d = collect_episodes(m, pi, io::parse_initial(a.mu, m.n_states), splitting, a.seed);
    }
    std::ostringstream os;
    write_dataset_csv(os, d);
    emit(a.out, os.str());
    return 0;
}

struct LearnArgs {
    std::string data, rewards_from, member = "plus", algo = "plugin", criterion, rewards = "known", mu = "point:0",
                                     out;
    double gamma = 0.9, delta = 0.1, eps_opt = 1e-6;
    bool sa_sampled = false;
};

int learn(const LearnArgs& a) {
    const Mdp m = load_model(a.rewards_from, a.member);
    std::ifstream in(a.data);
    if (!in) throw FormatError("cannot open " + a.data);
    const Dataset d = read_dataset_csv(in, a.sa_sampled);
    const EmpiricalModel em = fit_empirical(d, m.n_states, m.n_actions);
    const numvec rewards = a.rewards == "known" ? m.reward_means() : em.reward_means();
    if (a.rewards != "known" && a.rewards != "empirical") throw DomainError("--rewards must be known or empirical");
    const InitialDist mu = io::parse_initial(a.mu, m.n_states);
    Policy pi;
    if (a.algo == "plugin") {
        const Criterion crit = a.criterion.empty() ? Criterion{Discounted{a.gamma}} : io::parse_criterion(a.criterion);
        pi = plug_in(em, rewards, crit, a.eps_opt, mu);
    } else if (a.algo == "pessimistic") {
        pi = pessimistic(em, rewards, a.gamma, a.delta, a.eps_opt, mu);
    } else {
        throw DomainError("--algo must be plugin or pessimistic");
    }
    emit(a.out, io::to_json(pi).dump(2) + "\n");
    return 0;
}

struct EvalArgs {
    std::string mdp, member = "plus", policy, criterion, mu = "point:0";
    double eps = 0.1;
};

int eval(const EvalArgs& a) {
    const Mdp m = load_model(a.mdp, a.member);
    const Policy pi = io::policy_from_json(io::read_json_file(a.policy));
    const Criterion crit = io::parse_criterion(a.criterion);
    const InitialDist mu = io::parse_initial(a.mu, m.n_states);
    const double value = evaluate_policy(m, pi, crit, mu);
    const double best = optimal_value(m, crit, mu);
    const bool sound = value > best - a.eps;
    std::printf("value %.17g\noptimal %.17g\ngap %.17g\nsound %s\n", value, best, best - value,
                sound ? "true" : "false");
    return sound ? 0 : 1;
}

int run_sweep(const std::string& config, const std::string& out, bool serial) {
    const ExperimentConfig cfg = io::config_from_json(io::read_json_file(config));
    const SweepResult r = sweep(cfg, serial ? kernels::Execution::Serial : kernels::Execution::Parallel);
    std::ostringstream os;
    write_sweep_csv(os, r);
    emit(out, os.str());
    return 0;
}

int check_ratios() {
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CounterRng rng(derive_key(0xC0FFEE, seed));
        const std::size_t S = 2 + rng() % 3, A = 2 + rng() % 2;
        const Mdp m = random_mdp(S, A, rng());
        const Policy target = random_policy(S, A, rng());
        const RatioReport r = ratio_bound_check(m, target, InitialDist::uniform(S), 6);
        if (!r.ok) {
            std::printf("violation on random instance %llu\n", static_cast<unsigned long long>(seed));
            ok = false;
        }
    }
    std::printf("ratios: %s\n", ok ? "ok" : "VIOLATED");
    return ok ? 0 : 1;
}

int check_bh() {
    bool ok = true;
    for (int i = 1; i <= 19; ++i)
        for (int k = 1; k <= 19; ++k) {
            const double p = 0.05 * i, q = 0.05 * k;
            const double kl = binary_relative_entropy(p, q);
            // Events {1} and {0} for Bernoulli(p) against Bernoulli(q).
            ok = ok && bretagnolle_huber_check(p, 1.0 - q, kl) && bretagnolle_huber_check(1.0 - p, q, kl);
            ok = ok && kl <= binary_relative_entropy_bound(p, q) * (1.0 + 1e-12);
        }
    std::printf("bretagnolle-huber and relative entropy bound: %s\n", ok ? "ok" : "VIOLATED");
    return ok ? 0 : 1;
}

int check_chernoff() {
    bool ok = true;
    const std::size_t trials = 20000;
    for (std::size_t n : {20u, 100u})
        for (double p : {0.1, 0.5, 0.8})
            for (double beta : {0.0, 0.2, 0.4, 0.6}) {
                const double rate = chernoff_coverage_test(n, p, beta, trials, derive_key(n, std::size_t(p * 1000 + beta * 10)));
                const double bound = chernoff_bound(n, p, beta);
                const double sigma = std::sqrt(std::max(bound * (1.0 - bound), 1e-12) / trials);
                if (rate > bound + 3.0 * sigma) {
                    std::printf("n=%zu p=%g beta=%g: rate %g exceeds bound %g\n", n, p, beta, rate, bound);
                    ok = false;
                }
            }
    std::printf("chernoff: %s\n", ok ? "ok" : "VIOLATED");
    return ok ? 0 : 1;
}

int check_beta_coverage() {
    const Mdp m = random_mdp(3, 2, derive_key(0xBE7A, 0));
    const double rate = beta_coverage_rate(m, 300, 0.1, 500, 7);
    const bool ok = rate >= 0.85 && beta_radius(0, 0.999999, 1, 1) >= 1.177;
    std::printf("beta coverage rate %.4f: %s\n", rate, ok ? "ok" : "VIOLATED");
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular batch reinforcement learning laboratory"};
    app.require_subcommand(1);

    InstanceSpec spec;
    std::string family = "discounted-lock", gen_out;
    auto* gen = app.add_subcommand("gen-instance", "Generate a hard instance pair as JSON");
    gen->add_option("--family", family, "discounted-lock|fh-lock|avg-lock|sa-gadget")->required();
    gen->add_option("--states", spec.states);
    gen->add_option("--actions", spec.actions);
    gen->add_option("--gamma", spec.gamma);
    gen->add_option("--eps", spec.eps);
    gen->add_option("--horizon", spec.horizon);
    gen->add_option("--p", spec.p);
    gen->add_option("--gamma0", spec.gamma0);
    gen->add_option("--out", gen_out);

    CollectArgs ca;
    auto* col = app.add_subcommand("collect", "Collect a dataset from an MDP");
    col->add_option("--mdp", ca.mdp)->required();
    col->add_option("--member", ca.member, "plus|minus when --mdp is a pair");
    col->add_option("--policy", ca.policy, "uniform or a policy JSON file");
    col->add_option("--episodes", ca.episodes);
    col->add_option("--len", ca.len);
    col->add_option("--sa", ca.sa, "SA-sample this many tuples from uniform mu_log instead");
    col->add_option("--mu", ca.mu);
    col->add_option("--seed", ca.seed);
    col->add_option("--out", ca.out);

    LearnArgs la;
    auto* lrn = app.add_subcommand("learn", "Run a batch learner on a dataset");
    lrn->add_option("--data", la.data)->required();
    lrn->add_option("--mdp-rewards", la.rewards_from, "MDP or pair whose shape and reward means are used")->required();
    lrn->add_option("--member", la.member);
    lrn->add_option("--algo", la.algo, "plugin|pessimistic");
    lrn->add_option("--gamma", la.gamma);
    lrn->add_option("--criterion", la.criterion, "discounted:G|finite:H|average (plugin only)");
    lrn->add_option("--delta", la.delta);
    lrn->add_option("--eps-opt", la.eps_opt);
    lrn->add_option("--rewards", la.rewards, "known|empirical");
    lrn->add_option("--mu", la.mu);
    lrn->add_flag("--sa-sampled", la.sa_sampled, "Treat every CSV row as an independent sample");
    lrn->add_option("--out", la.out);

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Evaluate a policy exactly; exit 0 iff eps-sound");
    ev->add_option("--mdp", ea.mdp)->required();
    ev->add_option("--member", ea.member);
    ev->add_option("--policy", ea.policy)->required();
    ev->add_option("--criterion", ea.criterion)->required();
    ev->add_option("--mu", ea.mu);
    ev->add_option("--eps", ea.eps);

    std::string config, sweep_out;
    bool serial = false;
    auto* sw = app.add_subcommand("sweep", "Run a sample-size sweep");
    sw->add_option("--config", config)->required();
    sw->add_option("--out", sweep_out);
    sw->add_flag("--serial", serial);

    std::string suite;
    auto* chk = app.add_subcommand("check", "Run a property suite");
    chk->add_option("--suite", suite)->required()->check(CLI::IsMember({"ratios", "bh", "chernoff", "beta-coverage"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            spec.family = parse_family(family);
            return gen_instance(spec, gen_out);
        }
        if (*col) return collect(ca);
        if (*lrn) return learn(la);
        if (*ev) return eval(ea);
        if (*sw) return run_sweep(config, sweep_out, serial);
        if (*chk) {
            if (suite == "ratios") return check_ratios();
            if (suite == "bh") return check_bh();
            if (suite == "chernoff") return check_chernoff();
            return check_beta_coverage();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

#include "batchrl/io.hpp"

#include <fstream>
#include <limits>

namespace batchrl::io {

namespace {

template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

std::string noise_name(RewardNoise n) { return n == RewardNoise::Deterministic ? "det" : "gauss1"; }

RewardNoise parse_noise(const std::string& s) {
    if (s == "det") return RewardNoise::Deterministic;
    if (s == "gauss1") return RewardNoise::GaussianUnitVariance;
    throw FormatError("unknown reward noise '" + s + "'");
}

} // namespace

json to_json(const Mdp& m) {
    json transition = json::array(), reward = json::array();
    for (State s = 0; s < m.n_states; ++s) {
        json trow = json::array(), rrow = json::array();
        for (Action a = 0; a < m.n_actions; ++a) {
            const auto r = m.row(s, a);
            trow.push_back(numvec(r.begin(), r.end()));
            const RewardSpec& spec = m.reward[m.sa(s, a)];
            rrow.push_back({{"mean", spec.mean}, {"noise", noise_name(spec.noise)}});
        }
        transition.push_back(std::move(trow));
        reward.push_back(std::move(rrow));
    }
    return {{"n_states", m.n_states}, {"n_actions", m.n_actions}, {"transition", transition}, {"reward", reward}};
}

Mdp mdp_from_json(const json& j) {
    Mdp m = guarded("MDP document", [&] {
        const auto S = j.at("n_states").get<std::size_t>();
        const auto A = j.at("n_actions").get<std::size_t>();
        const json& t = j.at("transition");
        const json& r = j.at("reward");
        if (t.size() != S || r.size() != S) throw FormatError("MDP tables must have n_states rows");
        Mdp out(S, A);
        for (State s = 0; s < S; ++s) {
            if (t[s].size() != A || r[s].size() != A) throw FormatError("MDP tables must have n_actions columns");
            for (Action a = 0; a < A; ++a) {
                const auto row = t[s][a].get<numvec>();
                if (row.size() != S) throw FormatError("transition rows must have n_states entries");
                std::copy(row.begin(), row.end(), out.row(s, a).begin());
                out.reward[out.sa(s, a)] = {r[s][a].at("mean").get<double>(),
                                            parse_noise(r[s][a].at("noise").get<std::string>())};
            }
        }
        return out;
    });
    validate_mdp(m);
    return m;
}

json to_json(const Policy& pi) {
    auto stage = [&](std::size_t h) {
        json rows = json::array();
        for (State s = 0; s < pi.n_states(); ++s) {
            const auto d = pi.dist(h, s);
            rows.push_back(numvec(d.begin(), d.end()));
        }
        return rows;
    };
    json out{{"kind", pi.is_stationary() ? "stationary" : "stage_indexed"},
             {"n_states", pi.n_states()},
             {"n_actions", pi.n_actions()}};
    if (pi.is_stationary()) {
        out["probs"] = stage(0);
    } else {
        out["horizon"] = pi.horizon();
        json stages = json::array();
        for (std::size_t h = 0; h < pi.horizon(); ++h) stages.push_back(stage(h));
        out["probs"] = std::move(stages);
    }
    return out;
}

Policy policy_from_json(const json& j) {
    return guarded("policy document", [&] {
        const auto kind = j.at("kind").get<std::string>();
        const auto S = j.at("n_states").get<std::size_t>();
        const auto A = j.at("n_actions").get<std::size_t>();
        auto flatten = [&](const json& rows, numvec& out) {
            if (rows.size() != S) throw FormatError("policy needs one row per state");
            for (const auto& row : rows) {
                const auto d = row.get<numvec>();
                if (d.size() != A) throw FormatError("policy rows need one entry per action");
                out.insert(out.end(), d.begin(), d.end());
            }
        };
        numvec probs;
        if (kind == "stationary") {
            flatten(j.at("probs"), probs);
            return Policy::stationary(S, A, std::move(probs));
        }
        if (kind == "stage_indexed") {
            const json& stages = j.at("probs");
            for (const auto& st : stages) flatten(st, probs);
            return Policy::stage_indexed(stages.size(), S, A, std::move(probs));
        }
        throw FormatError("unknown policy kind '" + kind + "'");
    });
}

json to_json(const Criterion& crit) {
    if (const auto* d = std::get_if<Discounted>(&crit)) return {{"type", "discounted"}, {"gamma", d->gamma}};
    if (const auto* f = std::get_if<FiniteHorizon>(&crit)) return {{"type", "finite"}, {"horizon", f->horizon}};
    return {{"type", "average"}};
}

Criterion criterion_from_json(const json& j) {
    return guarded("criterion", [&]() -> Criterion {
        const auto type = j.at("type").get<std::string>();
        if (type == "discounted") return Discounted{j.at("gamma").get<double>()};
        if (type == "finite") return FiniteHorizon{j.at("horizon").get<std::size_t>()};
        if (type == "average") return AverageReward{};
        throw FormatError("unknown criterion '" + type + "'");
    });
}

json to_json(const InstancePair& pair) {
    const Analytic& an = pair.analytic;
    json analytic{{"v_plus", an.v_plus},
                  {"v_minus", an.v_minus},
                  {"chain_length", an.chain_length},
                  {"reach_prob", an.reach_prob},
                  {"gamma", an.gamma}};
    if (pair.family == Family::SaGadget) {
        analytic["gamma0"] = an.gamma0;
        analytic["b"] = an.b;
        analytic["p0"] = an.p0;
        analytic["p1"] = an.p1;
        analytic["p_bar"] = an.p_bar;
        analytic["loop_state"] = an.loop_state;
        analytic["loop_plus"] = an.loop_plus;
        analytic["loop_minus"] = an.loop_minus;
        analytic["substituted"] = an.substituted;
    }
    json out{{"family", family_name(pair.family)},
             {"criterion", to_json(pair.criterion)},
             {"mu", pair.mu.probs()},
             {"eps", pair.eps},
             {"distinguished",
              {{"state", pair.distinguished.state},
               {"action", pair.distinguished.action},
               {"transition", pair.distinguished.transition},
               {"all_actions", pair.distinguished.all_actions}}},
             {"analytic", analytic},
             {"m_plus", to_json(pair.m_plus)},
             {"m_minus", to_json(pair.m_minus)}};
    if (pair.pi_log.n_states() > 0) out["pi_log"] = to_json(pair.pi_log);
    if (!pair.mu_log.empty()) out["mu_log"] = pair.mu_log;
    if (pair.family == Family::AverageRewardLock) out["p"] = pair.p;
    return out;
}

InstancePair pair_from_json(const json& j) {
    return guarded("instance pair document", [&] {
        const json& an = j.at("analytic");
        Analytic a;
        a.v_plus = an.at("v_plus").get<double>();
        a.v_minus = an.at("v_minus").get<double>();
        a.chain_length = an.at("chain_length").get<std::size_t>();
        a.reach_prob = an.at("reach_prob").get<double>();
        a.gamma = an.at("gamma").get<double>();
        a.gamma0 = an.value("gamma0", 0.0);
        a.b = an.value("b", 0.0);
        a.p0 = an.value("p0", 0.0);
        a.p1 = an.value("p1", 0.0);
        a.p_bar = an.value("p_bar", 0.0);
        a.loop_state = an.value("loop_state", std::size_t{0});
        a.loop_plus = an.value("loop_plus", numvec{});
        a.loop_minus = an.value("loop_minus", numvec{});
        a.substituted = an.value("substituted", false);
        const json& d = j.at("distinguished");
        InstancePair pair{parse_family(j.at("family").get<std::string>()),
                          mdp_from_json(j.at("m_plus")),
                          mdp_from_json(j.at("m_minus")),
                          criterion_from_json(j.at("criterion")),
                          InitialDist(j.at("mu").get<numvec>()),
                          j.at("eps").get<double>(),
                          Cell{d.at("state").get<State>(), d.at("action").get<Action>(),
                               d.at("transition").get<bool>(), d.at("all_actions").get<bool>()},
                          a,
                          j.contains("pi_log") ? policy_from_json(j.at("pi_log")) : Policy{},
                          j.value("mu_log", numvec{})};
        pair.p = j.value("p", 0.0);
        return pair;
    });
}

namespace {

std::string algo_name(Algo a) { return a == Algo::PlugIn ? "plugin" : "pessimistic"; }

Algo parse_algo(const std::string& s) {
    if (s == "plugin") return Algo::PlugIn;
    if (s == "pessimistic") return Algo::Pessimistic;
    throw FormatError("unknown learner '" + s + "'");
}

} // namespace

json to_json(const ExperimentConfig& cfg) {
    const InstanceSpec& in = cfg.instance;
    json logging{{"policy", "uniform"}};
    if (cfg.logging.policy) {
        const numvec& flat = *cfg.logging.policy;
        if (flat.size() != in.states * in.actions) throw ShapeMismatch("logging policy must have S*A entries");
        json rows = json::array();
        for (std::size_t s = 0; s < in.states; ++s)
            rows.push_back(numvec(flat.begin() + long(s * in.actions), flat.begin() + long((s + 1) * in.actions)));
        logging["policy"] = rows;
    }
    switch (cfg.logging.length) {
    case EpisodeLength::Lock: logging["episode_length"] = "lock"; break;
    case EpisodeLength::Thm5: logging["episode_length"] = "thm5"; break;
    case EpisodeLength::Fixed: logging["episode_length"] = cfg.logging.fixed_length; break;
    }
    json out{{"instance",
              {{"family", family_name(in.family)},
               {"states", in.states},
               {"actions", in.actions},
               {"gamma", in.gamma},
               {"eps", in.eps},
               {"horizon", in.horizon},
               {"p", in.p},
               {"gamma0", in.gamma0}}},
             {"learner",
              {{"algo", algo_name(cfg.learner.algo)},
               {"delta", cfg.learner.delta},
               {"eps_opt", cfg.learner.eps_opt},
               {"rewards", cfg.learner.rewards == RewardKnowledge::Known ? "known" : "empirical"}}},
             {"logging", logging},
             {"m_grid", cfg.m_grid},
             {"trials", cfg.trials},
             {"master_seed", cfg.master_seed}};
    out["eps"] = cfg.eps ? json(*cfg.eps) : json(nullptr);
    return out;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg = guarded("experiment config", [&] {
        ExperimentConfig c;
        const json& in = j.at("instance");
        c.instance.family = parse_family(in.at("family").get<std::string>());
        c.instance.states = in.value("states", c.instance.states);
        c.instance.actions = in.value("actions", c.instance.actions);
        c.instance.gamma = in.value("gamma", c.instance.gamma);
        c.instance.eps = in.value("eps", c.instance.eps);
        c.instance.horizon = in.value("horizon", c.instance.horizon);
        c.instance.p = in.value("p", c.instance.p);
        c.instance.gamma0 = in.value("gamma0", c.instance.gamma0);

        if (j.contains("learner")) {
            const json& l = j.at("learner");
            c.learner.algo = parse_algo(l.value("algo", std::string("plugin")));
            c.learner.delta = l.value("delta", c.learner.delta);
            c.learner.eps_opt = l.value("eps_opt", c.learner.eps_opt);
            const auto rewards = l.value("rewards", std::string("empirical"));
            if (rewards == "known") c.learner.rewards = RewardKnowledge::Known;
            else if (rewards == "empirical") c.learner.rewards = RewardKnowledge::Empirical;
            else throw FormatError("rewards must be 'known' or 'empirical'");
        }

        if (j.contains("logging")) {
            const json& l = j.at("logging");
            if (l.contains("policy") && !l.at("policy").is_string()) {
                numvec flat;
                for (const auto& row : l.at("policy")) {
                    const auto d = row.get<numvec>();
                    flat.insert(flat.end(), d.begin(), d.end());
                }
                c.logging.policy = std::move(flat);
            } else if (l.contains("policy") && l.at("policy").get<std::string>() != "uniform") {
                throw FormatError("logging policy must be 'uniform' or a table");
            }
            if (l.contains("episode_length")) {
                const json& len = l.at("episode_length");
                if (len.is_number_integer()) {
                    c.logging.length = EpisodeLength::Fixed;
                    c.logging.fixed_length = len.get<std::size_t>();
                } else if (len.get<std::string>() == "lock") {
                    c.logging.length = EpisodeLength::Lock;
                } else if (len.get<std::string>() == "thm5") {
                    c.logging.length = EpisodeLength::Thm5;
                } else {
                    throw FormatError("episode_length must be 'lock', 'thm5' or an integer");
                }
            }
        }

        c.m_grid = j.at("m_grid").get<std::vector<std::size_t>>();
        c.trials = j.at("trials").get<std::size_t>();
        if (j.contains("eps") && !j.at("eps").is_null()) c.eps = j.at("eps").get<double>();
        c.master_seed = j.value("master_seed", std::uint64_t{0});
        return c;
    });
    cfg.validate();
    return cfg;
}

Criterion parse_criterion(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    const std::string tail = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
    try {
        if (head == "average" && tail.empty()) return AverageReward{};
        if (head == "discounted" && !tail.empty()) {
            Criterion c = Discounted{std::stod(tail)};
            validate_criterion(c);
            return c;
        }
        if (head == "finite" && !tail.empty()) {
            Criterion c = FiniteHorizon{static_cast<std::size_t>(std::stoull(tail))};
            validate_criterion(c);
            return c;
        }
    } catch (const std::logic_error&) {
    }
    throw FormatError("criterion must be discounted:G, finite:H or average, got '" + std::string(text) + "'");
}

InitialDist parse_initial(std::string_view text, std::size_t states) {
    if (text == "uniform") return InitialDist::uniform(states);
    if (text.substr(0, 6) == "point:") {
        try {
            return InitialDist::point(static_cast<State>(std::stoull(std::string(text.substr(6)))), states);
        } catch (const std::logic_error&) {
        }
    }
    throw FormatError("initial distribution must be point:K or uniform, got '" + std::string(text) + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << j.dump(2) << '\n';
}

} // namespace batchrl::io

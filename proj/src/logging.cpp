#include "batchrl/logging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace batchrl {

std::size_t Dataset::episode_offset(std::size_t j) const {
    if (j > lengths.size()) throw IndexOutOfRange("episode index out of range");
    std::size_t offset = 0;
    for (std::size_t k = 0; k < j; ++k) offset += lengths[k];
    return offset;
}

std::size_t Dataset::flat_index(std::size_t j, std::size_t t) const {
    if (j >= lengths.size() || t >= lengths[j]) throw IndexOutOfRange("episode step out of range");
    return episode_offset(j) + t;
}

std::span<const Transition> Dataset::episode(std::size_t j) const {
    if (j >= lengths.size()) throw IndexOutOfRange("episode index out of range");
    return std::span(flat).subspan(episode_offset(j), lengths[j]);
}

Policy uniform_policy(std::size_t states, std::size_t actions) {
    if (states == 0 || actions == 0) throw ShapeMismatch("uniform policy needs at least one state and action");
    return Policy::stationary(states, actions, numvec(states * actions, 1.0 / static_cast<double>(actions)));
}

double sample_reward(const RewardSpec& spec, CounterRng& rng) {
    if (spec.noise == RewardNoise::GaussianUnitVariance) return spec.mean + rng.normal();
    return spec.mean;
}

namespace {

Transition step(const Mdp& m, State s, Action a, CounterRng& rng) {
    const double r = sample_reward(m.reward[m.sa(s, a)], rng);
    return {s, a, r, rng.categorical(m.row(s, a))};
}

} // namespace

Dataset sa_sample(const Mdp& m, std::span<const double> mu_log, std::size_t n, std::uint64_t seed,
                  kernels::Execution ex) {
    if (mu_log.size() != m.pairs()) throw InvalidDistribution("logging distribution must cover S*A pairs");
    double total = 0.0;
    for (double x : mu_log) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidDistribution("logging distribution has a bad entry");
        total += x;
    }
    if (std::abs(total - 1.0) > construction_tol) throw InvalidDistribution("logging distribution does not sum to 1");

    Dataset d;
    d.sa_sampled = true;
    d.flat.resize(n);
    kernels::for_each_index(ex, n, [&](std::size_t i) {
        CounterRng rng(derive_key(seed, i));
        const std::size_t pair = rng.categorical(mu_log);
        d.flat[i] = step(m, pair / m.n_actions, pair % m.n_actions, rng);
    });
    return d;
}

Dataset collect_episodes(const Mdp& m, const Policy& pi_log, const InitialDist& mu,
                         std::span<const std::size_t> splitting, std::uint64_t seed, kernels::Execution ex) {
    if (!pi_log.is_stationary()) throw ShapeMismatch("logging policy must be stationary");
    if (pi_log.n_states() != m.n_states || pi_log.n_actions() != m.n_actions)
        throw ShapeMismatch("logging policy shape does not match the MDP");
    if (mu.size() != m.n_states) throw ShapeMismatch("initial distribution size does not match the MDP");

    Dataset d;
    d.lengths.assign(splitting.begin(), splitting.end());
    std::vector<std::size_t> offsets(splitting.size());
    std::size_t total = 0;
    for (std::size_t j = 0; j < splitting.size(); ++j) {
        if (splitting[j] == 0) throw DomainError("episode lengths must be positive");
        offsets[j] = total;
        total += splitting[j];
    }
    d.flat.resize(total);
    kernels::for_each_index(ex, splitting.size(), [&](std::size_t j) {
        CounterRng rng(derive_key(seed, j));
        State s = rng.categorical(mu.probs());
        for (std::size_t t = 0; t < splitting[j]; ++t) {
            const Action a = rng.categorical(pi_log.dist(s));
            const Transition tr = step(m, s, a, rng);
            d.flat[offsets[j] + t] = tr;
            s = tr.next_state;
        }
    });
    return d;
}

Action min_action(const Policy& pi_log, State s) {
    if (!pi_log.is_stationary()) throw ShapeMismatch("min_action needs a stationary policy");
    if (s >= pi_log.n_states()) throw IndexOutOfRange("state out of range");
    const auto d = pi_log.dist(s);
    return static_cast<Action>(std::min_element(d.begin(), d.end()) - d.begin());
}

double nonuniform_hardness(const Policy& pi_log, std::size_t u) {
    if (!pi_log.is_stationary()) throw ShapeMismatch("hardness needs a stationary policy");
    if (u > pi_log.n_states()) throw DomainError("subset size exceeds the number of states");
    numvec smallest(pi_log.n_states());
    for (State s = 0; s < pi_log.n_states(); ++s) {
        const auto d = pi_log.dist(s);
        smallest[s] = *std::min_element(d.begin(), d.end());
    }
    std::sort(smallest.begin(), smallest.end());
    double out = 1.0;
    for (std::size_t k = 0; k < u; ++k) {
        if (smallest[k] == 0.0) return std::numeric_limits<double>::infinity();
        out /= smallest[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_dataset_csv(std::ostream& out, const Dataset& d) {
    out << "episode,step,state,action,reward,next_state\n";
    char reward[40];
    auto line = [&](std::size_t episode, std::size_t t, const Transition& tr) {
        std::snprintf(reward, sizeof reward, "%.17g", tr.reward);
        out << episode << ',' << t << ',' << tr.state << ',' << tr.action << ',' << reward << ','
            << tr.next_state << '\n';
    };
    if (d.sa_sampled) {
        for (std::size_t i = 0; i < d.flat.size(); ++i) line(i, 0, d.flat[i]);
        return;
    }
    std::size_t i = 0;
    for (std::size_t j = 0; j < d.lengths.size(); ++j)
        for (std::size_t t = 0; t < d.lengths[j]; ++t) line(j, t, d.flat[i++]);
}

namespace {

std::size_t parse_count(const std::string& field, std::size_t line_no) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(field, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != field.size() || field[0] == '-')
        throw FormatError("line " + std::to_string(line_no) + ": expected a count, got '" + field + "'");
    return static_cast<std::size_t>(v);
}

double parse_real(const std::string& field, std::size_t line_no) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != field.size())
        throw FormatError("line " + std::to_string(line_no) + ": expected a real, got '" + field + "'");
    return v;
}

} // namespace

Dataset read_dataset_csv(std::istream& in, bool sa_sampled) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("missing CSV header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "episode,step,state,action,reward,next_state") throw FormatError("unexpected CSV header: " + line);

    Dataset d;
    d.sa_sampled = sa_sampled;
    std::size_t line_no = 1;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fields.clear();
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw FormatError("line " + std::to_string(line_no) + ": expected 6 fields");
        const std::size_t episode = parse_count(fields[0], line_no);
        const std::size_t t = parse_count(fields[1], line_no);
        Transition tr{parse_count(fields[2], line_no), parse_count(fields[3], line_no),
                      parse_real(fields[4], line_no), parse_count(fields[5], line_no)};
        if (sa_sampled) {
            if (t != 0 || episode != d.flat.size())
                throw FormatError("line " + std::to_string(line_no) + ": SA-sampled rows need step 0 and row index");
        } else if (t == 0) {
            if (episode != d.lengths.size())
                throw FormatError("line " + std::to_string(line_no) + ": episodes must be numbered consecutively");
            d.lengths.push_back(1);
        } else {
            if (d.lengths.empty() || episode + 1 != d.lengths.size() || t != d.lengths.back())
                throw FormatError("line " + std::to_string(line_no) + ": steps must be consecutive");
            if (d.flat.back().next_state != tr.state)
                throw FormatError("line " + std::to_string(line_no) + ": transitions do not chain");
            ++d.lengths.back();
        }
        d.flat.push_back(tr);
    }
    return d;
}

} // namespace batchrl

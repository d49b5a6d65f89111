#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "batchrl/instances.hpp"
#include "batchrl/kernels.hpp"

namespace batchrl {

struct InstanceSpec {
    Family family = Family::DiscountedLock;
    std::size_t states = 5;
    std::size_t actions = 2;
    double gamma = 0.9;
    double eps = 0.35;
    std::size_t horizon = 3; // finite-horizon lock only
    double p = 0.5;          // average-reward lock only
    double gamma0 = 0.9;     // SA gadget only
};

enum class Algo { PlugIn, Pessimistic };

/// Whether learners receive the true reward means or estimate them from data.
enum class RewardKnowledge { Known, Empirical };

struct LearnerSpec {
    Algo algo = Algo::PlugIn;
    double delta = 0.1;
    double eps_opt = 1e-6;
    RewardKnowledge rewards = RewardKnowledge::Empirical;
};

enum class EpisodeLength { Lock, Thm5, Fixed };

struct LoggingSpec {
    /// Stationary S*A table; uniform when absent.
    std::optional<numvec> policy;
    EpisodeLength length = EpisodeLength::Lock;
    std::size_t fixed_length = 1;
};

struct ExperimentConfig {
    InstanceSpec instance;
    LearnerSpec learner;
    LoggingSpec logging;
    std::vector<std::size_t> m_grid;
    std::size_t trials = 1;
    /// Soundness tolerance; the instance's eps when absent.
    std::optional<double> eps;
    std::uint64_t master_seed = 0;

    void validate() const;
};

/// Builds the pair described by `spec` under the given logging policy
/// (uniform when absent; the SA gadget always uses uniform mu_log).
InstancePair build_instance(const InstanceSpec& spec, const std::optional<numvec>& logging_policy = std::nullopt);

/// Episode length for policy-induced collection on `pair`.
std::size_t episode_length(const InstancePair& pair, const LoggingSpec& logging, double eps);

struct TrialOutcome {
    bool sound = false;
    double gap = 0.0;   ///< v*(mu) - v^pi(mu)
    double value = 0.0; ///< v^pi(mu)
    Policy policy;
};

/// Collects m episodes (m samples for the SA gadget) on one member, runs the
/// learner and evaluates the result exactly.
TrialOutcome run_trial(const InstancePair& pair, bool plus, const LearnerSpec& learner, const LoggingSpec& logging,
                       std::size_t m, double eps, std::uint64_t seed);

/// Same, with v*(mu) of the member supplied by the caller.
TrialOutcome run_trial(const InstancePair& pair, bool plus, const LearnerSpec& learner, const LoggingSpec& logging,
                       std::size_t m, double eps, std::uint64_t seed, double v_star);

/// Seed of trial `trial` on `member` (0 plus, 1 minus) at grid point `point`.
std::uint64_t trial_seed(std::uint64_t master, std::size_t point, std::size_t member, std::size_t trial);

struct SweepRow {
    std::string family;
    std::string member; // plus, minus or worst
    std::size_t states = 0;
    std::size_t actions = 0;
    std::size_t horizon = 0;
    double gamma = 0.0;
    double eps = 0.0;
    std::size_t m = 0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double rate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    double mean_gap = 0.0;
    double theory_floor = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;

    /// Rows for one member in grid order.
    std::vector<SweepRow> member_rows(const std::string& member) const;

    bool operator==(const SweepResult&) const = default;
};

/// Runs every grid point on both members. Trials are pure functions of
/// (config, point, member, trial), so Serial and Parallel agree exactly.
SweepResult sweep(const ExperimentConfig& cfg, kernels::Execution ex = kernels::Execution::Parallel);

void write_sweep_csv(std::ostream& out, const SweepResult& result);

} // namespace batchrl

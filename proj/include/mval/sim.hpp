#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mval/core.hpp"
#include "mval/learner.hpp"

namespace mval {

// Rank-based scored policy generation. Probabilities follow
// (1 + eta)^(-rank) with rank 0 the best-scored action, so eta = 0 is uniform
// and large eta is near-deterministic.
struct PolicyGenConfig {
    double eta = 0.0;
    double delta = 0.0;
    std::size_t target_rank = 2;  // 1-based; rank 1 is the top action
    std::uint64_t seed = 0;
    double weight_mean = 0.0;
    double weight_stddev = 1.0;

    void validate(std::size_t n_actions) const;
};

struct TrialReport {
    std::string method;
    std::vector<double> estimates;
    double mean = 0.0;
    double empirical_var = 0.0;
    double variance_stderr = 0.0;  // bootstrap over the estimate list
};

enum class AugStrategy { Mval, Precomputed, Target, Uniform };

std::string strategy_name(AugStrategy s);

// Synthetic stand-ins for the front-page setting: cross features with
// standard-normal entries and Bernoulli click rates drawn uniformly from
// [mean_lo, mean_hi] per cell.
FeatureSet synthetic_features(std::size_t n_contexts, std::size_t n_actions,
                              std::uint64_t seed, std::size_t user_dim = 5,
                              std::size_t item_dim = 5);
Environment synthetic_environment(std::size_t n_contexts, std::size_t n_actions,
                                  std::uint64_t seed, double mean_lo = 0.0,
                                  double mean_hi = 0.1);

Policy generate_scored_policy(const FeatureSet& features, const PolicyGenConfig& cfg);

// Moves delta * p_top from each context's top-ranked action (under p_log,
// ties broken by action id) to the action ranked target_rank.
Policy derive_target(const Policy& p_log, double delta, std::size_t target_rank);

LoggedDataset sample_logged_data(const Environment& env, const Policy& p,
                                 std::int64_t n, std::uint64_t seed, Source source_tag);

// Replays a uniform log under policy p: keeps record i iff a' ~ p(.|x_i)
// matches the logged action. Errors: NotUniformSource.
LoggedDataset rejection_sample(const LoggedDataset& uniform_log, const Policy& p,
                               std::uint64_t seed);

struct TrialOptions {
    // m fed to the MVAL solver; uniform-constant is the default experiment
    // protocol, exact uses the environment truth.
    bool exact_second_moment = false;
    const FeatureSet* features = nullptr;  // required for Precomputed
    int learner_steps = 200;
};

// Per trial t: n_log samples from p_log, n_aug from the strategy's policy,
// one balanced estimate. RNG stream is (seed, t); trials run in parallel.
TrialReport run_variance_trials(const Environment& env, const Policy& p_log,
                                const Policy& p_target, AugStrategy strategy,
                                std::int64_t n_log, std::int64_t n_aug, int trials,
                                std::uint64_t seed, const TrialOptions& options = {});

enum class SweepMode { Eta, Delta, Multi };

struct SweepConfig {
    SweepMode mode = SweepMode::Eta;
    std::vector<double> grid;  // eta or delta values; single dummy point for Multi
    double eta = 4.0;          // fixed eta for Delta/Multi
    double delta = 0.4;        // fixed delta for Eta/Multi
    std::int64_t n_log = 900;
    std::int64_t n_aug = 100;
    int trials = 50;
    int repeats = 20;
    std::uint64_t seed = 0;
    std::size_t n_contexts = 10;
    std::size_t n_actions = 19;
    bool exact_second_moment = false;
    std::vector<std::string> strategies;  // default depends on mode
};

struct SweepRow {
    double grid_value = 0.0;
    std::string strategy;
    double variance = 0.0;  // mean over repeats of the per-repeat empirical variance
    double stderr_ = 0.0;   // standard error over repeats
};

// Repeats the trial protocol per grid point with fresh policy seeds per
// repeat. Multi mode builds three targets at ranks 2, 3, 4 and compares
// round_robin / uniform / mval-on-pi_max; the per-repeat statistic is the
// mean across targets of the empirical estimate variance.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

}  // namespace mval

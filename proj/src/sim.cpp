#include "mval/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mval/estimators.hpp"
#include "mval/parallel.hpp"
#include "mval/policyclass.hpp"
#include "mval/rng.hpp"
#include "mval/solver.hpp"

namespace mval {

namespace {

// Stream tags keeping independent draws independent.
constexpr std::uint64_t kEnvStream = 0xE17;
constexpr std::uint64_t kFeatureStream = 0xF3A7;
constexpr std::uint64_t kPolicyStream = 0x90C1;
constexpr std::uint64_t kTrialStream = 0x7214;
constexpr std::uint64_t kBootstrapStream = 0xB007;

std::size_t sample_categorical(std::span<const double> probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return probs.size() - 1;  // guard against rounding at the tail
}

// Descending rank order; ties broken by action id for reproducibility.
std::vector<std::size_t> rank_descending(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] > values[b];
    });
    return order;
}

double bootstrap_variance_stderr(std::span<const double> estimates,
                                 std::uint64_t seed) {
    constexpr int kResamples = 200;
    if (estimates.size() < 2) return 0.0;
    auto rng = make_rng(seed, {kBootstrapStream});
    std::uniform_int_distribution<std::size_t> pick(0, estimates.size() - 1);

    std::vector<double> resample(estimates.size());
    std::vector<double> variances(kResamples);
    for (int b = 0; b < kResamples; ++b) {
        for (double& v : resample) v = estimates[pick(rng)];
        variances[b] = empirical_variance(resample);
    }
    double mean = 0.0;
    for (double v : variances) mean += v;
    mean /= kResamples;
    double ss = 0.0;
    for (double v : variances) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (kResamples - 1));
}

}  // namespace

void PolicyGenConfig::validate(std::size_t n_actions) const {
    if (eta < 0.0) fail("NegativeEntry", "eta must be >= 0");
    if (delta < 0.0 || delta > 1.0) fail("InvalidDelta", "delta must be in [0, 1]");
    if (target_rank < 2 || target_rank > n_actions)
        fail("RankOutOfRange", "target_rank must be in [2, actions]");
}

std::string strategy_name(AugStrategy s) {
    switch (s) {
        case AugStrategy::Mval: return "mval";
        case AugStrategy::Precomputed: return "precomputed";
        case AugStrategy::Target: return "target";
        case AugStrategy::Uniform: return "uniform";
    }
    return "unknown";
}

FeatureSet synthetic_features(std::size_t n_contexts, std::size_t n_actions,
                              std::uint64_t seed, std::size_t user_dim,
                              std::size_t item_dim) {
    auto rng = make_rng(seed, {kFeatureStream});
    std::normal_distribution<double> normal(0.0, 1.0);
    FeatureSet features(n_contexts);
    for (auto& ctx : features) {
        ctx.user.resize(user_dim);
        for (double& v : ctx.user) v = normal(rng);
        ctx.items = Matrix(n_actions, item_dim);
        for (double& v : ctx.items.data) v = normal(rng);
    }
    return features;
}

Environment synthetic_environment(std::size_t n_contexts, std::size_t n_actions,
                                  std::uint64_t seed, double mean_lo, double mean_hi) {
    auto rng = make_rng(seed, {kEnvStream});
    std::uniform_real_distribution<double> mean_dist(mean_lo, mean_hi);
    Matrix means(n_contexts, n_actions);
    for (double& v : means.data) v = mean_dist(rng);
    return make_bernoulli_environment(
        std::vector<double>(n_contexts, 1.0 / static_cast<double>(n_contexts)),
        std::move(means));
}

Policy generate_scored_policy(const FeatureSet& features, const PolicyGenConfig& cfg) {
    if (features.empty()) fail("EmptyTable", "feature set is empty");
    const std::size_t d = features.front().actions();
    cfg.validate(d);

    auto rng = make_rng(cfg.seed, {kPolicyStream});
    std::normal_distribution<double> normal(cfg.weight_mean, cfg.weight_stddev);
    std::vector<double> v(features.front().cross_dim());
    for (double& w : v) w = normal(rng);

    Policy p;
    p.table = Matrix(features.size(), d);
    for (std::size_t x = 0; x < features.size(); ++x) {
        const auto& ctx = features[x];
        std::vector<double> scores(d, 0.0);
        for (std::size_t a = 0; a < d; ++a) {
            std::size_t k = 0;
            for (std::size_t i = 0; i < ctx.user.size(); ++i)
                for (std::size_t j = 0; j < ctx.items.cols; ++j, ++k)
                    scores[a] += v[k] * ctx.user[i] * ctx.items(a, j);
        }
        const auto order = rank_descending(scores);
        double norm = 0.0;
        std::vector<double> weights(d);
        for (std::size_t rank = 0; rank < d; ++rank) {
            weights[rank] = std::pow(1.0 + cfg.eta, -static_cast<double>(rank));
            norm += weights[rank];
        }
        for (std::size_t rank = 0; rank < d; ++rank)
            p.table(x, order[rank]) = weights[rank] / norm;
    }
    return p;
}

Policy derive_target(const Policy& p_log, double delta, std::size_t target_rank) {
    if (delta < 0.0 || delta > 1.0) fail("InvalidDelta", "delta must be in [0, 1]");
    if (target_rank < 2 || target_rank > p_log.actions())
        fail("RankOutOfRange", "target_rank must be in [2, actions]");

    Policy target = p_log;
    for (std::size_t x = 0; x < p_log.contexts(); ++x) {
        const auto order = rank_descending(p_log.row(x));
        const std::size_t top = order[0];
        const std::size_t receiver = order[target_rank - 1];
        const double shift = delta * p_log.prob(x, top);
        target.table(x, top) -= shift;
        target.table(x, receiver) += shift;
    }
    return target;
}

LoggedDataset sample_logged_data(const Environment& env, const Policy& p,
                                 std::int64_t n, std::uint64_t seed, Source source_tag) {
    if (n < 0) fail("NegativeCount", "sample count must be >= 0");
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    LoggedDataset data;
    if (source_tag == Source::Log)
        data.log_policy = p;
    else
        data.aug_policy = p;
    data.samples.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        LoggedSample s;
        s.source = source_tag;
        s.context_id = sample_categorical(env.context_probs, rng);
        s.action_id = sample_categorical(p.row(s.context_id), rng);
        const double rbar = env.mean_reward(s.context_id, s.action_id);
        if (env.reward_kind == RewardKind::Bernoulli) {
            s.reward = unit(rng) < rbar ? 1.0 : 0.0;
        } else {
            const double sigma = std::sqrt(env.reward_variance(s.context_id, s.action_id));
            s.reward = rbar + sigma * normal(rng);
        }
        data.samples.push_back(s);
    }
    return data;
}

LoggedDataset rejection_sample(const LoggedDataset& uniform_log, const Policy& p,
                               std::uint64_t seed) {
    const double uniform_prob = 1.0 / static_cast<double>(p.actions());
    for (double v : uniform_log.log_policy.table.data)
        if (std::abs(v - uniform_prob) > 1e-12)
            fail("NotUniformSource", "rejection sampling requires a uniform source log");

    auto rng = make_rng(seed);
    LoggedDataset out;
    out.log_policy = p;
    for (const auto& s : uniform_log.samples) {
        const std::size_t proposal = sample_categorical(p.row(s.context_id), rng);
        if (proposal == s.action_id) out.samples.push_back(s);
    }
    return out;
}

namespace {

Policy strategy_policy(const Environment& env, const Policy& p_log,
                       const Policy& p_target, AugStrategy strategy,
                       std::int64_t n_log, std::int64_t n_aug,
                       const TrialOptions& options) {
    const SecondMomentModel m =
        options.exact_second_moment
            ? second_moment(env)
            : uniform_second_moment(env.contexts(), env.actions(), 1.0);
    const double alpha = MixProfile{n_log, n_aug}.alpha();

    switch (strategy) {
        case AugStrategy::Target:
            return p_target;
        case AugStrategy::Uniform:
            return uniform_policy(env.contexts(), env.actions());
        case AugStrategy::Mval:
            return mval_policy_table(p_target.table, p_log, m, alpha).first;
        case AugStrategy::Precomputed: {
            if (options.features == nullptr ||
                options.features->size() != env.contexts())
                fail("MissingFeatures",
                     "precomputed strategy needs features matching the environment");
            FitConfig fit;
            fit.steps = options.learner_steps;
            const LearnerParams params = precomputed_mval_fit(
                *options.features, p_log, p_target.table, m, alpha, fit);
            return policy_from_params(params, *options.features);
        }
    }
    fail("UnknownStrategy", "unresolvable augmentation strategy");
}

// One trial's estimates for each target policy; shared sampled data.
std::vector<double> one_trial(const Environment& env, const Policy& p_log,
                              const Policy& p_aug,
                              const std::vector<Policy>& targets,
                              const MixProfile& mix, std::uint64_t trial_seed) {
    LoggedDataset data =
        sample_logged_data(env, p_log, mix.n_log, derive_seed(trial_seed, {0}), Source::Log);
    LoggedDataset aug =
        sample_logged_data(env, p_aug, mix.n_aug, derive_seed(trial_seed, {1}), Source::Aug);
    data.aug_policy = p_aug;
    for (const auto& s : aug.samples) data.samples.push_back(s);

    std::vector<double> estimates;
    estimates.reserve(targets.size());
    for (const auto& target : targets)
        estimates.push_back(
            balanced_estimate(data, target, p_log, p_aug, mix).point_estimate);
    return estimates;
}

}  // namespace

TrialReport run_variance_trials(const Environment& env, const Policy& p_log,
                                const Policy& p_target, AugStrategy strategy,
                                std::int64_t n_log, std::int64_t n_aug, int trials,
                                std::uint64_t seed, const TrialOptions& options) {
    if (trials < 2) fail("TooFewValues", "need at least 2 trials");
    const MixProfile mix{n_log, n_aug};
    mix.validate();
    const Policy p_aug =
        strategy_policy(env, p_log, p_target, strategy, n_log, n_aug, options);
    const std::vector<Policy> targets{p_target};

    TrialReport report;
    report.method = strategy_name(strategy);
    report.estimates.resize(static_cast<std::size_t>(trials));
    parallel_for(report.estimates.size(), [&](std::size_t t) {
        report.estimates[t] =
            one_trial(env, p_log, p_aug, targets, mix,
                      derive_seed(seed, {kTrialStream, t}))[0];
    });

    for (double v : report.estimates) report.mean += v;
    report.mean /= static_cast<double>(trials);
    report.empirical_var = empirical_variance(report.estimates);
    report.variance_stderr = bootstrap_variance_stderr(report.estimates, seed);
    return report;
}

namespace {

std::vector<std::string> default_strategies(SweepMode mode) {
    if (mode == SweepMode::Multi) return {"mval", "round_robin", "uniform"};
    return {"mval", "target", "uniform"};
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
    if (cfg.repeats < 2) fail("TooFewValues", "need at least 2 repeats");
    const std::vector<std::string> strategies =
        cfg.strategies.empty() ? default_strategies(cfg.mode) : cfg.strategies;
    const Environment env =
        synthetic_environment(cfg.n_contexts, cfg.n_actions, derive_seed(cfg.seed, {0}));

    std::vector<double> grid = cfg.grid;
    if (cfg.mode == SweepMode::Multi && grid.empty()) grid = {cfg.eta};
    if (grid.empty()) fail("EmptyGrid", "sweep grid must be non-empty");

    const std::size_t n_grid = grid.size();
    const std::size_t n_rep = static_cast<std::size_t>(cfg.repeats);
    // variance[(g * repeats + r) * strategies + s]
    std::vector<double> variance(n_grid * n_rep * strategies.size(), 0.0);

    parallel_for(n_grid * n_rep, [&](std::size_t flat) {
        const std::size_t g = flat / n_rep;
        const std::size_t r = flat % n_rep;
        const double eta = cfg.mode == SweepMode::Eta ? grid[g] : cfg.eta;
        const double delta = cfg.mode == SweepMode::Delta ? grid[g] : cfg.delta;

        const FeatureSet features =
            synthetic_features(cfg.n_contexts, cfg.n_actions, derive_seed(cfg.seed, {g, r, 1}));
        PolicyGenConfig gen;
        gen.eta = eta;
        gen.seed = derive_seed(cfg.seed, {g, r, 2});
        const Policy p_log = generate_scored_policy(features, gen);

        std::vector<Policy> targets;
        if (cfg.mode == SweepMode::Multi) {
            for (std::size_t rank = 2; rank <= 4; ++rank)
                targets.push_back(derive_target(p_log, delta, rank));
        } else {
            targets.push_back(derive_target(p_log, delta, 2));
        }

        const MixProfile mix{cfg.n_log, cfg.n_aug};
        const double alpha = mix.alpha();
        const SecondMomentModel m =
            cfg.exact_second_moment
                ? second_moment(env)
                : uniform_second_moment(cfg.n_contexts, cfg.n_actions, 1.0);

        for (std::size_t s = 0; s < strategies.size(); ++s) {
            Policy p_aug;
            const std::string& name = strategies[s];
            if (name == "uniform") {
                p_aug = uniform_policy(cfg.n_contexts, cfg.n_actions);
            } else if (name == "target") {
                p_aug = targets.front();
            } else if (name == "round_robin") {
                // Marginal distribution of cycling through the targets.
                p_aug.table = Matrix(cfg.n_contexts, cfg.n_actions, 0.0);
                for (const auto& t : targets)
                    for (std::size_t i = 0; i < p_aug.table.data.size(); ++i)
                        p_aug.table.data[i] +=
                            t.table.data[i] / static_cast<double>(targets.size());
            } else if (name == "mval") {
                if (cfg.mode == SweepMode::Multi) {
                    const PiMaxEnvelope envelope = pi_max_finite(targets);
                    p_aug = mval_solve_multi(envelope, p_log, alpha, m).first;
                } else {
                    p_aug = mval_policy_table(targets.front().table, p_log, m, alpha).first;
                }
            } else if (name == "precomputed") {
                FitConfig fit;
                fit.steps = 200;
                Matrix weights = targets.front().table;
                if (cfg.mode == SweepMode::Multi)
                    weights = pi_max_finite(targets).table;
                const LearnerParams params =
                    precomputed_mval_fit(features, p_log, weights, m, alpha, fit);
                p_aug = policy_from_params(params, features);
            } else {
                fail("UnknownStrategy", "unknown sweep strategy: " + name);
            }

            std::vector<std::vector<double>> estimates(
                targets.size(), std::vector<double>(cfg.trials));
            for (int t = 0; t < cfg.trials; ++t) {
                const auto trial = one_trial(
                    env, p_log, p_aug, targets, mix,
                    derive_seed(cfg.seed, {kTrialStream, g, r, s, static_cast<std::uint64_t>(t)}));
                for (std::size_t k = 0; k < targets.size(); ++k)
                    estimates[k][static_cast<std::size_t>(t)] = trial[k];
            }
            double mean_var = 0.0;
            for (const auto& est : estimates) mean_var += empirical_variance(est);
            mean_var /= static_cast<double>(targets.size());
            variance[flat * strategies.size() + s] = mean_var;
        }
    });

    std::vector<SweepRow> rows;
    rows.reserve(n_grid * strategies.size());
    for (std::size_t g = 0; g < n_grid; ++g) {
        for (std::size_t s = 0; s < strategies.size(); ++s) {
            double mean = 0.0;
            for (std::size_t r = 0; r < n_rep; ++r)
                mean += variance[(g * n_rep + r) * strategies.size() + s];
            mean /= static_cast<double>(n_rep);
            double ss = 0.0;
            for (std::size_t r = 0; r < n_rep; ++r) {
                const double v = variance[(g * n_rep + r) * strategies.size() + s];
                ss += (v - mean) * (v - mean);
            }
            SweepRow row;
            row.grid_value = grid[g];
            row.strategy = strategies[s];
            row.variance = mean;
            row.stderr_ = std::sqrt(ss / static_cast<double>(n_rep - 1)) /
                          std::sqrt(static_cast<double>(n_rep));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace mval

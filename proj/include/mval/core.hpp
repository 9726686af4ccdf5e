#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mval/error.hpp"

namespace mval {

// Dense row-major matrix of doubles. Contexts index rows, actions columns.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) {
        return {data.data() + r * cols, cols};
    }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

// Row-stochastic table pi(a|x) over dense context and action ids.
// Construct through validate_policy so the simplex invariant holds.
struct Policy {
    Matrix table;

    std::size_t contexts() const { return table.rows; }
    std::size_t actions() const { return table.cols; }
    double prob(std::size_t x, std::size_t a) const { return table(x, a); }
    std::span<const double> row(std::size_t x) const { return table.row(x); }
};

enum class RewardKind { Bernoulli, FixedGaussian };

// Simulation ground truth: context distribution plus per-cell reward law.
struct Environment {
    std::vector<double> context_probs;
    Matrix mean_reward;
    Matrix reward_variance;
    RewardKind reward_kind = RewardKind::Bernoulli;

    std::size_t contexts() const { return mean_reward.rows; }
    std::size_t actions() const { return mean_reward.cols; }

    // Enforces: probs >= 0 summing to 1 within 1e-12, variances >= 0, and
    // sigma^2 = rbar(1-rbar) for Bernoulli cells.
    void validate() const;
};

Environment make_bernoulli_environment(std::vector<double> context_probs,
                                       Matrix mean_reward);

// Sample-count bookkeeping. alpha = n_aug / N is always derived from the
// integer counts, never stored as a float of its own.
struct MixProfile {
    std::int64_t n_log = 0;
    std::int64_t n_aug = 0;

    std::int64_t n() const { return n_log + n_aug; }
    double alpha() const { return static_cast<double>(n_aug) / static_cast<double>(n()); }

    void validate() const {
        if (n_log < 0 || n_aug < 0) fail("NegativeCount", "sample counts must be >= 0");
        if (n() < 1) fail("EmptyMix", "n_log + n_aug must be >= 1");
    }
};

enum class Source { Log, Aug };

struct LoggedSample {
    std::size_t context_id = 0;
    std::size_t action_id = 0;
    double reward = 0.0;
    Source source = Source::Log;
};

// Bandit feedback records plus the policies that generated them. Propensities
// are always recomputed from the stored policies, never cached per sample.
struct LoggedDataset {
    std::vector<LoggedSample> samples;
    Policy log_policy;
    std::optional<Policy> aug_policy;

    std::size_t size() const { return samples.size(); }
    MixProfile counts() const;

    // Checks ids against the given shape and, when a profile is supplied,
    // per-source counts against it.
    void validate(std::size_t n_contexts, std::size_t n_actions,
                  const MixProfile* expected = nullptr) const;
};

enum class MomentProvenance { ExactFromEnv, UniformConstant, Fitted };

// Working estimate of E_r[r^2(x,a)] per cell.
struct SecondMomentModel {
    Matrix m;
    MomentProvenance provenance = MomentProvenance::Fitted;

    double operator()(std::size_t x, std::size_t a) const { return m(x, a); }
};

// Accepts rows within 1e-9 of the simplex, then renormalizes them exactly.
// Errors: NegativeEntry, RowSumOutOfTolerance, NonFiniteEntry.
Policy validate_policy(const Matrix& raw_table);

Policy uniform_policy(std::size_t n_contexts, std::size_t n_actions);

// Entrywise (1-alpha) * p_old + alpha * p_aug.
Policy mix_policies(const Policy& p_old, const Policy& p_aug, const MixProfile& mix);

// m(x,a) = rbar^2 + sigma^2 per cell, provenance ExactFromEnv.
SecondMomentModel second_moment(const Environment& env);

SecondMomentModel uniform_second_moment(std::size_t n_contexts, std::size_t n_actions,
                                        double constant);

// Ground-truth expected reward of p under env:
//   sum_x Pr(x) sum_a rbar(x,a) pi(a|x)
double true_utility(const Policy& p, const Environment& env);

}  // namespace mval

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mval/core.hpp"

namespace mval {

// One context's features: a user vector and one item vector per action.
// Default dimensions are 5 x 5 (25 cross features); the math is agnostic.
struct FeatureContext {
    std::vector<double> user;
    Matrix items;  // actions x item_dim

    std::size_t actions() const { return items.rows; }
    std::size_t cross_dim() const { return user.size() * items.cols; }
};

using FeatureSet = std::vector<FeatureContext>;

// Linear-softmax policy parameters over cross features, plus the per-step
// objective trace of the fit that produced them.
struct LearnerParams {
    std::vector<double> w;
    std::vector<double> training_log;
};

struct FitConfig {
    int steps = 300;
    double step_size = 1.0;
    std::uint64_t seed = 0;
};

// Row-major outer product u x item.
std::vector<double> featurize(std::span<const double> u, std::span<const double> item);

// Softmax over logits w . phi(u, A_j) per context; logits are clamped to
// [-50, 50] before the softmax.
Policy policy_from_params(const LearnerParams& params, const FeatureSet& contexts);

struct ObjectiveEval {
    double value = 0.0;
    std::vector<double> gradient;
};

// Pre-computed MVAL objective over the context sample:
//   sum_x sum_a weights(x,a) / ((1-alpha) pi_old(a|x) + alpha pi_w(a|x))
// where weights(x,a) = target_or_envelope(x,a)^2 m(x,a). The gradient is the
// exact derivative through the softmax. Errors: InfiniteObjective.
ObjectiveEval precomputed_objective(const LearnerParams& params, const FeatureSet& contexts,
                            const Policy& p_old, const Matrix& target_or_envelope,
                            const SecondMomentModel& m, double alpha);

// Full-batch gradient descent on precomputed_objective from w = 0 with Armijo
// backtracking (c = 1e-4, halving), so training_log is non-increasing.
LearnerParams precomputed_mval_fit(const FeatureSet& contexts, const Policy& p_old,
                                   const Matrix& target_or_envelope,
                                   const SecondMomentModel& m, double alpha,
                                   const FitConfig& config);

// Gradient ascent on the balanced-estimator value of pi_w over the given log;
// returns the best iterate seen.
LearnerParams erm_balanced_fit(const LoggedDataset& data, const Policy& p_old,
                               const Policy& p_aug, const MixProfile& mix,
                               const FeatureSet& contexts, const FitConfig& config);

}  // namespace mval

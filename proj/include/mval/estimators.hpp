#pragma once

#include <span>
#include <vector>

#include "mval/core.hpp"

namespace mval {

enum class VarianceFormula { Ips, Balanced, Bound };

struct EstimateReport {
    double point_estimate = 0.0;
    std::int64_t n_used = 0;
    // Weighted-reward sums divided by N, split by sample source.
    double log_contribution = 0.0;
    double aug_contribution = 0.0;
};

// The expectation term and the R^2 term are kept separate; value is their
// difference exactly as computed, never clamped.
struct VarianceReport {
    double value = 0.0;
    VarianceFormula formula = VarianceFormula::Balanced;
    double expectation_term = 0.0;
    double r_squared_term = 0.0;
};

struct MomentReport {
    double mean = 0.0;
    double variance = 0.0;
    // Set when the mean deviates from the true utility (support deficiency).
    bool biased = false;
};

// (1/N) sum_i pi_t(a_i|x_i) / pi_src(a_i|x_i) * r_i, where pi_src is the
// policy that generated sample i.
EstimateReport ips_estimate(const LoggedDataset& data, const Policy& p_target);

// (1/N) sum_i pi_t(a_i|x_i) / pi_balanced(a_i|x_i) * r_i with
// pi_balanced = (1-alpha) p_old + alpha p_aug.
EstimateReport balanced_estimate(const LoggedDataset& data, const Policy& p_target,
                                 const Policy& p_old, const Policy& p_aug,
                                 const MixProfile& mix);

// (n_log/N^2) E_x[sum_a pi_t^2 m / pi_old]
//   + (n_aug/N^2) E_x[sum_a pi_t^2 m / pi_aug] - R^2/N.
VarianceReport ips_variance_closed_form(const Policy& p_target, const Policy& p_old,
                                        const Policy& p_aug, const MixProfile& mix,
                                        const SecondMomentModel& m,
                                        const Environment& env);

// (1/N) * (E_x[sum_a pi_t^2 m / pi_balanced] - R^2).
VarianceReport balanced_variance_closed_form(const Policy& p_target, const Policy& p_old,
                                             const Policy& p_aug, const MixProfile& mix,
                                             const SecondMomentModel& m,
                                             const Environment& env);

// Variance of a single importance-weighted term under policy p:
//   E_x[sum_a pi_t^2 m / p] - R^2.
double single_term_variance(const Policy& p, const Policy& p_target,
                            const SecondMomentModel& m, const Environment& env);

// Unbiased sample variance, divisor n-1. Errors: TooFewValues.
double empirical_variance(std::span<const double> values);

// Independent oracle for the closed-form variances. Enumerates the
// single-sample term distribution per source (contexts x actions x reward
// outcomes) and combines with per-sample independence:
//   mean = (n_log E_log[T] + n_aug E_aug[T]) / N
//   var  = (n_log (E_log[T^2] - R^2) + n_aug (E_aug[T^2] - R^2)) / N^2
// The variance combination follows the per-sample decomposition in which each
// term is centered at the target utility R; it matches the closed forms
// exactly, and matches the fixed-per-source-count sampling variance whenever
// the per-source term means coincide. Errors: TooLarge.
MomentReport exact_estimator_moments(const Environment& env, const Policy& p_target,
                                     const Policy& p_old, const Policy& p_aug,
                                     const MixProfile& mix, VarianceFormula formula);

}  // namespace mval

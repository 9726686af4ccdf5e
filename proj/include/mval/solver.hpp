#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mval/core.hpp"

namespace mval {

// Per-context objective weights c_a = pi_t^2(a|x) m(x,a); for multi-policy
// evaluation pi_max^2 replaces pi_t^2.
struct ContextWeights {
    std::vector<double> c;
    std::size_t context_id = 0;
};

struct SolverDiagnostics {
    double lambda = 0.0;
    std::vector<std::size_t> active_set;
    int bisection_iters = 0;
    double simplex_residual = 0.0;
    // All weights were zero; the canonical uniform row was returned.
    bool degenerate_weights = false;
};

// The per-context MVAL objective sum_a c_a / ((1-alpha) q_a + alpha pi_a).
double mval_objective(std::span<const double> c, std::span<const double> q,
                      double alpha, std::span<const double> pi);

// Variance-optimal logging policy for the pure IPS case (alpha = 1):
//   pi(a) = pi_t(a) sqrt(m_a) / sum_a' pi_t(a') sqrt(m_a').
// Errors: DegenerateWeights when every pi_t sqrt(m) is zero.
std::vector<double> minvar_ips_policy(std::span<const double> target_row,
                                      std::span<const double> m_row);

// KKT water-filling solver for the per-context MVAL program: minimizes the
// objective above over the probability simplex. Actions with c_a = 0 get
// pi_a = 0; lambda is found by bisection on the mass function
//   pi_a(lambda) = max(0, (sqrt(alpha c_a / lambda) - (1-alpha) q_a) / alpha).
// Errors: ZeroAlpha, InvalidAlpha, ShapeMismatch.
std::pair<std::vector<double>, SolverDiagnostics> mval_solve_context(
    const ContextWeights& weights, std::span<const double> old_row, double alpha);

// Exhaustive minimizer of the same objective over the resolution-step simplex
// grid. Used as the independent optimum certificate in tests. For grids too
// large to enumerate directly it switches to exact greedy unit allocation,
// which finds the same grid optimum for these separable convex objectives
// (the two paths are cross-checked against each other in the unit tests).
// Errors: TooManyActions, ResolutionTooLarge.
std::vector<double> mval_grid_oracle(const ContextWeights& weights,
                                     std::span<const double> old_row, double alpha,
                                     int resolution);

// Force the exhaustive enumeration path regardless of size (test use only).
std::vector<double> mval_grid_oracle_exhaustive(const ContextWeights& weights,
                                                std::span<const double> old_row,
                                                double alpha, int resolution);

// Candidate solution pi = (pi_minvar_ips - (1-alpha) q) / alpha. Present iff
// every entry is >= -1e-12 (then clamped to 0) and the row sums to 1 within
// 1e-9; absent means infeasible, fall back to mval_solve_context.
std::optional<std::vector<double>> large_alpha_closed_form(
    std::span<const double> target_row, std::span<const double> m_row,
    std::span<const double> old_row, double alpha);

// Lower bound on the variance decrease from switching one sample's divisor
// from epsilon to (N epsilon + 1)/N:  y / (epsilon (N epsilon + 1)).
double variance_decrease_single_sample(double epsilon, std::int64_t n_before, double y);

// Convenience: solve every context of a policy-shaped problem. The weight for
// cell (x,a) is target(x,a)^2 m(x,a); `target` may be a policy table or a
// pi_max envelope.
std::pair<Policy, std::vector<SolverDiagnostics>> mval_policy_table(
    const Matrix& target, const Policy& p_old, const SecondMomentModel& m,
    double alpha);

}  // namespace mval

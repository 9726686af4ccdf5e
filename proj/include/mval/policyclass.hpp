#pragma once

#include <vector>

#include "mval/core.hpp"
#include "mval/solver.hpp"

namespace mval {

// Per-cell upper envelope pi_max of a policy class. Rows are in [0,1] but need
// not sum to 1.
struct PiMaxEnvelope {
    Matrix table;
};

struct TrustRegionOptions {
    // Use the pi_max ~= pi_t approximation instead of the exact per-cell
    // maximum (kept for experiment parity; the multi-policy argmin is
    // invariant to the uniform tau scaling whenever tau * pi_t <= 1
    // everywhere).
    bool approximate_with_center = false;
    // One-sided class {pi <= tau pi_t} instead of the two-sided
    // [pi_t / tau, tau pi_t] box.
    bool one_sided = false;
};

// Entrywise maximum over a finite class. Errors: EmptyClass, ShapeMismatch.
PiMaxEnvelope pi_max_finite(const std::vector<Policy>& policies);

// Exact per-cell maximum over the trust region
//   {pi | pi(a|x) in [pi_t(a|x)/tau, tau pi_t(a|x)]}:
//   min(tau pi_t(a|x), 1 - sum_{a' != a} pi_t(a'|x)/tau).
// Errors: InfeasibleClass (tau < 1 or lower bounds exceed the simplex).
PiMaxEnvelope pi_max_trust_region(const Policy& center, double tau,
                                  const TrustRegionOptions& options = {});

// Uniform variance bound over the class:
//   (1/N) E_x[sum_a pi_max^2(a|x) m(x,a) / pi_balanced(a|x)].
// Errors: InfiniteBound.
double variance_bound(const PiMaxEnvelope& envelope, const Policy& p_old,
                      const Policy& p_aug, const MixProfile& mix,
                      const SecondMomentModel& m, const Environment& env);

// Per-context water-filling with c_a = pi_max^2(a|x) m(x,a).
std::pair<Policy, std::vector<SolverDiagnostics>> mval_solve_multi(
    const PiMaxEnvelope& envelope, const Policy& p_old, double alpha,
    const SecondMomentModel& m);

}  // namespace mval

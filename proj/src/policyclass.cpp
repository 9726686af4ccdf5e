#include "mval/policyclass.hpp"

#include <algorithm>
#include <cmath>

namespace mval {

PiMaxEnvelope pi_max_finite(const std::vector<Policy>& policies) {
    if (policies.empty()) fail("EmptyClass", "finite policy class must be non-empty");
    PiMaxEnvelope env;
    env.table = policies.front().table;
    for (std::size_t i = 1; i < policies.size(); ++i) {
        if (!policies[i].table.same_shape(env.table))
            fail("ShapeMismatch", "policies in a finite class must share a shape");
        for (std::size_t j = 0; j < env.table.data.size(); ++j)
            env.table.data[j] = std::max(env.table.data[j], policies[i].table.data[j]);
    }
    return env;
}

PiMaxEnvelope pi_max_trust_region(const Policy& center, double tau,
                                  const TrustRegionOptions& options) {
    if (tau < 1.0) fail("InfeasibleClass", "trust region requires tau >= 1");

    PiMaxEnvelope env;
    env.table = Matrix(center.contexts(), center.actions());

    for (std::size_t x = 0; x < center.contexts(); ++x) {
        double lower_sum = 0.0;
        for (std::size_t a = 0; a < center.actions(); ++a)
            lower_sum += center.prob(x, a) / tau;
        if (lower_sum > 1.0 + 1e-12)
            fail("InfeasibleClass", "row lower bounds exceed the simplex");

        for (std::size_t a = 0; a < center.actions(); ++a) {
            const double pt = center.prob(x, a);
            if (options.approximate_with_center) {
                env.table(x, a) = pt;
                continue;
            }
            double cap = std::min(tau * pt, 1.0);
            if (!options.one_sided) {
                // Other actions sit at their lower bounds when this one maxes out.
                cap = std::min(cap, 1.0 - (lower_sum - pt / tau));
            }
            env.table(x, a) = std::max(cap, 0.0);
        }
    }
    return env;
}

double variance_bound(const PiMaxEnvelope& envelope, const Policy& p_old,
                      const Policy& p_aug, const MixProfile& mix,
                      const SecondMomentModel& m, const Environment& env) {
    mix.validate();
    if (!envelope.table.same_shape(p_old.table) || !envelope.table.same_shape(m.m))
        fail("ShapeMismatch", "envelope, policies and moment model shapes differ");
    const Policy balanced = mix_policies(p_old, p_aug, mix);

    double expectation = 0.0;
    for (std::size_t x = 0; x < env.contexts(); ++x) {
        double inner = 0.0;
        for (std::size_t a = 0; a < env.actions(); ++a) {
            const double pm = envelope.table(x, a);
            const double numer = pm * pm * m(x, a);
            if (numer == 0.0) continue;
            const double pb = balanced.prob(x, a);
            if (pb <= 0.0)
                fail("InfiniteBound", "envelope has mass where the mixture has none");
            inner += numer / pb;
        }
        expectation += env.context_probs[x] * inner;
    }
    return expectation / static_cast<double>(mix.n());
}

std::pair<Policy, std::vector<SolverDiagnostics>> mval_solve_multi(
    const PiMaxEnvelope& envelope, const Policy& p_old, double alpha,
    const SecondMomentModel& m) {
    return mval_policy_table(envelope.table, p_old, m, alpha);
}

}  // namespace mval

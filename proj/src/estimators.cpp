#include "mval/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mval {

namespace {

constexpr std::size_t kEnumerationBudget = 4096;  // contexts * actions

double source_prob(const LoggedDataset& data, const LoggedSample& s) {
    if (s.source == Source::Log) return data.log_policy.prob(s.context_id, s.action_id);
    if (!data.aug_policy)
        fail("MissingAugPolicy", "dataset has aug samples but no aug policy attached");
    return data.aug_policy->prob(s.context_id, s.action_id);
}

// E_x[sum_a pi_t^2(a|x) m(x,a) / divisor(a|x)], the common expectation kernel
// of every closed-form variance here. Throws InfiniteVariance on support gaps.
double weighted_inverse_expectation(const Policy& p_target, const Policy& divisor,
                                    const SecondMomentModel& m, const Environment& env) {
    double total = 0.0;
    for (std::size_t x = 0; x < env.contexts(); ++x) {
        double inner = 0.0;
        for (std::size_t a = 0; a < env.actions(); ++a) {
            const double pt = p_target.prob(x, a);
            const double numer = pt * pt * m(x, a);
            if (numer == 0.0) continue;
            const double d = divisor.prob(x, a);
            if (d <= 0.0)
                fail("InfiniteVariance",
                     "target has mass on (" + std::to_string(x) + "," +
                         std::to_string(a) + ") where the divisor policy is 0");
            inner += numer / d;
        }
        total += env.context_probs[x] * inner;
    }
    return total;
}

}  // namespace

EstimateReport ips_estimate(const LoggedDataset& data, const Policy& p_target) {
    if (data.samples.empty()) fail("EmptyDataset", "no samples to estimate from");
    EstimateReport report;
    report.n_used = static_cast<std::int64_t>(data.samples.size());
    const double n = static_cast<double>(report.n_used);

    for (const auto& s : data.samples) {
        const double propensity = source_prob(data, s);
        if (propensity <= 0.0)
            fail("ZeroPropensity", "logged sample has zero source propensity");
        const double term = p_target.prob(s.context_id, s.action_id) / propensity * s.reward;
        if (s.source == Source::Log)
            report.log_contribution += term / n;
        else
            report.aug_contribution += term / n;
    }
    report.point_estimate = report.log_contribution + report.aug_contribution;
    return report;
}

EstimateReport balanced_estimate(const LoggedDataset& data, const Policy& p_target,
                                 const Policy& p_old, const Policy& p_aug,
                                 const MixProfile& mix) {
    data.validate(p_target.contexts(), p_target.actions(), &mix);
    const Policy balanced = mix_policies(p_old, p_aug, mix);

    EstimateReport report;
    report.n_used = mix.n();
    const double n = static_cast<double>(report.n_used);

    for (const auto& s : data.samples) {
        const double pt = p_target.prob(s.context_id, s.action_id);
        const double pb = balanced.prob(s.context_id, s.action_id);
        double term = 0.0;
        if (pt != 0.0) {
            if (pb <= 0.0)
                fail("ZeroBalancedPropensity",
                     "balanced mixture has no support at a logged point");
            term = pt / pb * s.reward;
        }
        if (s.source == Source::Log)
            report.log_contribution += term / n;
        else
            report.aug_contribution += term / n;
    }
    report.point_estimate = report.log_contribution + report.aug_contribution;
    return report;
}

VarianceReport ips_variance_closed_form(const Policy& p_target, const Policy& p_old,
                                        const Policy& p_aug, const MixProfile& mix,
                                        const SecondMomentModel& m,
                                        const Environment& env) {
    mix.validate();
    const double n = static_cast<double>(mix.n());
    const double r = true_utility(p_target, env);

    VarianceReport report;
    report.formula = VarianceFormula::Ips;
    double expectation = 0.0;
    if (mix.n_log > 0)
        expectation += static_cast<double>(mix.n_log) / (n * n) *
                       weighted_inverse_expectation(p_target, p_old, m, env);
    if (mix.n_aug > 0)
        expectation += static_cast<double>(mix.n_aug) / (n * n) *
                       weighted_inverse_expectation(p_target, p_aug, m, env);
    report.expectation_term = expectation;
    report.r_squared_term = r * r / n;
    report.value = report.expectation_term - report.r_squared_term;
    return report;
}

VarianceReport balanced_variance_closed_form(const Policy& p_target, const Policy& p_old,
                                             const Policy& p_aug, const MixProfile& mix,
                                             const SecondMomentModel& m,
                                             const Environment& env) {
    mix.validate();
    const double n = static_cast<double>(mix.n());
    const double r = true_utility(p_target, env);
    const Policy balanced = mix_policies(p_old, p_aug, mix);

    VarianceReport report;
    report.formula = VarianceFormula::Balanced;
    report.expectation_term =
        weighted_inverse_expectation(p_target, balanced, m, env) / n;
    report.r_squared_term = r * r / n;
    report.value = report.expectation_term - report.r_squared_term;
    return report;
}

double single_term_variance(const Policy& p, const Policy& p_target,
                            const SecondMomentModel& m, const Environment& env) {
    const double r = true_utility(p_target, env);
    return weighted_inverse_expectation(p_target, p, m, env) - r * r;
}

double empirical_variance(std::span<const double> values) {
    if (values.size() < 2) fail("TooFewValues", "sample variance needs >= 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(values.size() - 1);
}

MomentReport exact_estimator_moments(const Environment& env, const Policy& p_target,
                                     const Policy& p_old, const Policy& p_aug,
                                     const MixProfile& mix, VarianceFormula formula) {
    mix.validate();
    if (env.contexts() * env.actions() > kEnumerationBudget)
        fail("TooLarge", "enumeration budget exceeded");

    const Policy balanced = mix_policies(p_old, p_aug, mix);
    const double r_true = true_utility(p_target, env);
    const double n = static_cast<double>(mix.n());

    // Single-sample term moments under a source policy: the sample term is
    // T = pi_t(a|x)/divisor(a|x) * r with (x,a) ~ Pr(x) pi_src(a|x).
    // Cells the source never visits do not enter the distribution; cells with
    // pi_t = 0 contribute T = 0 regardless of reward.
    auto term_moments = [&](const Policy& p_src) {
        double e_t = 0.0, e_t2 = 0.0;
        for (std::size_t x = 0; x < env.contexts(); ++x) {
            const double px = env.context_probs[x];
            for (std::size_t a = 0; a < env.actions(); ++a) {
                const double psrc = p_src.prob(x, a);
                if (psrc == 0.0) continue;
                const double pt = p_target.prob(x, a);
                if (pt == 0.0) continue;
                const double div = (formula == VarianceFormula::Ips)
                                       ? psrc
                                       : balanced.prob(x, a);
                if (div <= 0.0)
                    fail("ZeroBalancedPropensity",
                         "source reaches a cell the divisor policy never plays");
                const double w = pt / div;
                const double rbar = env.mean_reward(x, a);
                const double r2 = rbar * rbar + env.reward_variance(x, a);
                e_t += px * psrc * w * rbar;
                e_t2 += px * psrc * w * w * r2;
            }
        }
        return std::pair<double, double>{e_t, e_t2};
    };

    double mean_sum = 0.0, var_sum = 0.0;
    if (mix.n_log > 0) {
        auto [e, e2] = term_moments(p_old);
        mean_sum += static_cast<double>(mix.n_log) * e;
        var_sum += static_cast<double>(mix.n_log) * (e2 - r_true * r_true);
    }
    if (mix.n_aug > 0) {
        auto [e, e2] = term_moments(p_aug);
        mean_sum += static_cast<double>(mix.n_aug) * e;
        var_sum += static_cast<double>(mix.n_aug) * (e2 - r_true * r_true);
    }

    MomentReport report;
    report.mean = mean_sum / n;
    report.variance = var_sum / (n * n);
    report.biased = std::abs(report.mean - r_true) > 1e-9;
    return report;
}

}  // namespace mval

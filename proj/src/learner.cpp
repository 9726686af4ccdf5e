#include "mval/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mval {

namespace {

constexpr double kLogitClamp = 50.0;
constexpr double kArmijoC = 1e-4;

struct ContextSoftmax {
    std::vector<double> probs;
    std::vector<bool> clamped;
};

ContextSoftmax softmax_row(const LearnerParams& params, const FeatureContext& ctx) {
    const std::size_t d = ctx.actions();
    ContextSoftmax out;
    out.probs.resize(d);
    out.clamped.assign(d, false);

    double max_logit = -kLogitClamp;
    std::vector<double> logits(d);
    for (std::size_t a = 0; a < d; ++a) {
        double logit = 0.0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < ctx.user.size(); ++i)
            for (std::size_t j = 0; j < ctx.items.cols; ++j, ++k)
                logit += params.w[k] * ctx.user[i] * ctx.items(a, j);
        if (logit > kLogitClamp) {
            logit = kLogitClamp;
            out.clamped[a] = true;
        } else if (logit < -kLogitClamp) {
            logit = -kLogitClamp;
            out.clamped[a] = true;
        }
        logits[a] = logit;
        max_logit = std::max(max_logit, logit);
    }
    double norm = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        out.probs[a] = std::exp(logits[a] - max_logit);
        norm += out.probs[a];
    }
    for (double& p : out.probs) p /= norm;
    return out;
}

void check_dims(const LearnerParams& params, const FeatureSet& contexts) {
    if (contexts.empty()) fail("EmptyTable", "feature set is empty");
    for (const auto& ctx : contexts)
        if (ctx.cross_dim() != params.w.size())
            fail("DimMismatch", "weight vector length does not match cross features");
}

double squared_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

std::vector<double> featurize(std::span<const double> u, std::span<const double> item) {
    std::vector<double> phi;
    phi.reserve(u.size() * item.size());
    for (double ui : u)
        for (double ij : item) phi.push_back(ui * ij);
    return phi;
}

Policy policy_from_params(const LearnerParams& params, const FeatureSet& contexts) {
    check_dims(params, contexts);
    const std::size_t d = contexts.front().actions();
    Policy p;
    p.table = Matrix(contexts.size(), d);
    for (std::size_t x = 0; x < contexts.size(); ++x) {
        if (contexts[x].actions() != d)
            fail("DimMismatch", "all feature contexts must have the same action count");
        const auto sm = softmax_row(params, contexts[x]);
        std::copy(sm.probs.begin(), sm.probs.end(), p.table.row(x).begin());
    }
    return p;
}

ObjectiveEval precomputed_objective(const LearnerParams& params, const FeatureSet& contexts,
                            const Policy& p_old, const Matrix& target_or_envelope,
                            const SecondMomentModel& m, double alpha) {
    check_dims(params, contexts);
    if (alpha <= 0.0 || alpha > 1.0) fail("InvalidAlpha", "alpha must be in (0, 1]");
    if (p_old.contexts() != contexts.size())
        fail("DimMismatch", "logging policy rows do not match the context sample");

    ObjectiveEval eval;
    eval.gradient.assign(params.w.size(), 0.0);

    for (std::size_t x = 0; x < contexts.size(); ++x) {
        const auto& ctx = contexts[x];
        const std::size_t d = ctx.actions();
        const auto sm = softmax_row(params, ctx);

        // g_a = dV/dp_a; logit gradient is p_b (g_b - sum_a g_a p_a).
        std::vector<double> g(d, 0.0);
        double g_dot_p = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            const double t = target_or_envelope(x, a);
            const double c = t * t * m(x, a);
            if (c == 0.0) continue;
            const double denom = (1.0 - alpha) * p_old.prob(x, a) + alpha * sm.probs[a];
            if (denom <= 0.0)
                fail("InfiniteObjective", "zero denominator with positive weight");
            eval.value += c / denom;
            g[a] = -alpha * c / (denom * denom);
            g_dot_p += g[a] * sm.probs[a];
        }
        for (std::size_t b = 0; b < d; ++b) {
            if (sm.clamped[b]) continue;
            const double logit_grad = sm.probs[b] * (g[b] - g_dot_p);
            if (logit_grad == 0.0) continue;
            std::size_t k = 0;
            for (std::size_t i = 0; i < ctx.user.size(); ++i)
                for (std::size_t j = 0; j < ctx.items.cols; ++j, ++k)
                    eval.gradient[k] += logit_grad * ctx.user[i] * ctx.items(b, j);
        }
    }
    return eval;
}

LearnerParams precomputed_mval_fit(const FeatureSet& contexts, const Policy& p_old,
                                   const Matrix& target_or_envelope,
                                   const SecondMomentModel& m, double alpha,
                                   const FitConfig& config) {
    LearnerParams params;
    params.w.assign(contexts.empty() ? 0 : contexts.front().cross_dim(), 0.0);

    ObjectiveEval current = precomputed_objective(params, contexts, p_old, target_or_envelope, m, alpha);
    params.training_log.push_back(current.value);

    for (int step = 0; step < config.steps; ++step) {
        const double grad_sq = squared_norm(current.gradient);
        if (grad_sq == 0.0) break;

        double t = config.step_size;
        std::vector<double> trial_w(params.w.size());
        bool accepted = false;
        while (t > 1e-12) {
            for (std::size_t k = 0; k < params.w.size(); ++k)
                trial_w[k] = params.w[k] - t * current.gradient[k];
            LearnerParams trial{trial_w, {}};
            ObjectiveEval next =
                precomputed_objective(trial, contexts, p_old, target_or_envelope, m, alpha);
            if (std::isfinite(next.value) &&
                next.value <= current.value - kArmijoC * t * grad_sq) {
                params.w = trial_w;
                current = std::move(next);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // stationary to line-search precision
        if (!std::isfinite(current.value)) fail("DivergedObjective", "objective not finite");
        params.training_log.push_back(current.value);
    }
    return params;
}

namespace {

// Balanced-estimator value of pi_w on the training log, with its gradient.
ObjectiveEval erm_objective(const LearnerParams& params, const LoggedDataset& data,
                            const Policy& balanced, const FeatureSet& contexts) {
    ObjectiveEval eval;
    eval.gradient.assign(params.w.size(), 0.0);
    const double n = static_cast<double>(data.samples.size());

    std::vector<ContextSoftmax> rows(contexts.size());
    std::vector<bool> computed(contexts.size(), false);

    for (const auto& s : data.samples) {
        const std::size_t x = s.context_id;
        if (!computed[x]) {
            rows[x] = softmax_row(params, contexts[x]);
            computed[x] = true;
        }
        const double pb = balanced.prob(x, s.action_id);
        if (pb <= 0.0)
            fail("ZeroBalancedPropensity", "training sample outside mixture support");
        const double scale = s.reward / (pb * n);
        if (scale == 0.0) continue;
        const auto& sm = rows[x];
        const double pa = sm.probs[s.action_id];
        eval.value += scale * pa;

        const auto& ctx = contexts[x];
        for (std::size_t b = 0; b < ctx.actions(); ++b) {
            if (sm.clamped[b]) continue;
            const double logit_grad =
                scale * pa * ((b == s.action_id ? 1.0 : 0.0) - sm.probs[b]);
            if (logit_grad == 0.0) continue;
            std::size_t k = 0;
            for (std::size_t i = 0; i < ctx.user.size(); ++i)
                for (std::size_t j = 0; j < ctx.items.cols; ++j, ++k)
                    eval.gradient[k] += logit_grad * ctx.user[i] * ctx.items(b, j);
        }
    }
    return eval;
}

}  // namespace

LearnerParams erm_balanced_fit(const LoggedDataset& data, const Policy& p_old,
                               const Policy& p_aug, const MixProfile& mix,
                               const FeatureSet& contexts, const FitConfig& config) {
    if (data.samples.empty()) fail("EmptyDataset", "cannot fit on an empty log");
    const Policy balanced = mix_policies(p_old, p_aug, mix);

    LearnerParams params;
    params.w.assign(contexts.empty() ? 0 : contexts.front().cross_dim(), 0.0);
    check_dims(params, contexts);

    ObjectiveEval current = erm_objective(params, data, balanced, contexts);
    params.training_log.push_back(current.value);

    std::vector<double> best_w = params.w;
    double best_value = current.value;

    for (int step = 0; step < config.steps; ++step) {
        const double grad_sq = squared_norm(current.gradient);
        if (grad_sq == 0.0) break;

        double t = config.step_size;
        std::vector<double> trial_w(params.w.size());
        bool accepted = false;
        while (t > 1e-12) {
            for (std::size_t k = 0; k < params.w.size(); ++k)
                trial_w[k] = params.w[k] + t * current.gradient[k];
            LearnerParams trial{trial_w, {}};
            ObjectiveEval next = erm_objective(trial, data, balanced, contexts);
            if (std::isfinite(next.value) &&
                next.value >= current.value + kArmijoC * t * grad_sq) {
                params.w = trial_w;
                current = std::move(next);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        if (!std::isfinite(current.value)) fail("DivergedObjective", "objective not finite");
        params.training_log.push_back(current.value);
        if (current.value > best_value) {
            best_value = current.value;
            best_w = params.w;
        }
    }
    params.w = best_w;
    return params;
}

}  // namespace mval

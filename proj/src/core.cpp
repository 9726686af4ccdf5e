#include "mval/core.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace mval {

namespace {

constexpr double kRowSumTolerance = 1e-9;
constexpr double kExactTolerance = 1e-12;

}  // namespace

void Environment::validate() const {
    if (context_probs.size() != mean_reward.rows)
        fail("ShapeMismatch", "context_probs length does not match mean_reward rows");
    if (!mean_reward.same_shape(reward_variance))
        fail("ShapeMismatch", "mean_reward and reward_variance shapes differ");

    double total = 0.0;
    for (double p : context_probs) {
        if (!(p >= 0.0)) fail("NegativeEntry", "context probability < 0");
        total += p;
    }
    if (std::abs(total - 1.0) > kExactTolerance)
        fail("RowSumOutOfTolerance",
             "context_probs sum deviates from 1 by " + std::to_string(total - 1.0));

    for (std::size_t x = 0; x < contexts(); ++x) {
        for (std::size_t a = 0; a < actions(); ++a) {
            const double var = reward_variance(x, a);
            if (!(var >= 0.0)) fail("NegativeEntry", "reward variance < 0");
            if (reward_kind == RewardKind::Bernoulli) {
                const double rbar = mean_reward(x, a);
                if (rbar < 0.0 || rbar > 1.0)
                    fail("NegativeEntry", "Bernoulli mean outside [0,1]");
                if (std::abs(var - rbar * (1.0 - rbar)) > kExactTolerance)
                    fail("InconsistentVariance",
                         "Bernoulli cell variance != rbar*(1-rbar)");
            }
        }
    }
}

Environment make_bernoulli_environment(std::vector<double> context_probs,
                                       Matrix mean_reward) {
    Environment env;
    env.context_probs = std::move(context_probs);
    env.reward_variance = Matrix(mean_reward.rows, mean_reward.cols);
    for (std::size_t x = 0; x < mean_reward.rows; ++x)
        for (std::size_t a = 0; a < mean_reward.cols; ++a) {
            const double r = mean_reward(x, a);
            env.reward_variance(x, a) = r * (1.0 - r);
        }
    env.mean_reward = std::move(mean_reward);
    env.reward_kind = RewardKind::Bernoulli;
    env.validate();
    return env;
}

MixProfile LoggedDataset::counts() const {
    MixProfile mix;
    for (const auto& s : samples) {
        if (s.source == Source::Log)
            ++mix.n_log;
        else
            ++mix.n_aug;
    }
    return mix;
}

void LoggedDataset::validate(std::size_t n_contexts, std::size_t n_actions,
                             const MixProfile* expected) const {
    for (const auto& s : samples) {
        if (s.context_id >= n_contexts)
            fail("UnknownContext", "sample references context id out of range");
        if (s.action_id >= n_actions)
            fail("UnknownAction", "sample references action id out of range");
    }
    if (expected != nullptr) {
        const MixProfile got = counts();
        if (got.n_log != expected->n_log || got.n_aug != expected->n_aug)
            fail("CountMismatch", "per-source sample counts do not match the mix profile");
    }
}

Policy validate_policy(const Matrix& raw_table) {
    if (raw_table.rows == 0 || raw_table.cols == 0)
        fail("EmptyTable", "policy table must be non-empty");

    Policy p;
    p.table = raw_table;
    for (std::size_t x = 0; x < p.table.rows; ++x) {
        double sum = 0.0;
        for (std::size_t a = 0; a < p.table.cols; ++a) {
            const double v = p.table(x, a);
            if (!std::isfinite(v)) fail("NonFiniteEntry", "policy entry not finite");
            if (v < 0.0)
                fail("NegativeEntry",
                     "negative probability in row " + std::to_string(x));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            fail("RowSumOutOfTolerance",
                 "row " + std::to_string(x) + " sums to 1 " +
                     (sum > 1.0 ? "+" : "-") + std::to_string(std::abs(sum - 1.0)));
        for (std::size_t a = 0; a < p.table.cols; ++a) {
            double v = p.table(x, a) / sum;
            if (v > 1.0) v = 1.0;
            p.table(x, a) = v;
        }
    }
    return p;
}

Policy uniform_policy(std::size_t n_contexts, std::size_t n_actions) {
    Policy p;
    p.table = Matrix(n_contexts, n_actions, 1.0 / static_cast<double>(n_actions));
    return p;
}

Policy mix_policies(const Policy& p_old, const Policy& p_aug, const MixProfile& mix) {
    if (!p_old.table.same_shape(p_aug.table))
        fail("ShapeMismatch", "mix_policies requires identical policy shapes");
    mix.validate();
    const double alpha = mix.alpha();

    Policy out;
    out.table = Matrix(p_old.contexts(), p_old.actions());
    for (std::size_t i = 0; i < out.table.data.size(); ++i)
        out.table.data[i] = (1.0 - alpha) * p_old.table.data[i] + alpha * p_aug.table.data[i];
    return out;
}

SecondMomentModel second_moment(const Environment& env) {
    SecondMomentModel model;
    model.provenance = MomentProvenance::ExactFromEnv;
    model.m = Matrix(env.contexts(), env.actions());
    for (std::size_t x = 0; x < env.contexts(); ++x)
        for (std::size_t a = 0; a < env.actions(); ++a) {
            const double rbar = env.mean_reward(x, a);
            model.m(x, a) = rbar * rbar + env.reward_variance(x, a);
        }
    return model;
}

SecondMomentModel uniform_second_moment(std::size_t n_contexts, std::size_t n_actions,
                                        double constant) {
    if (constant < 0.0) fail("NegativeEntry", "second moment constant must be >= 0");
    SecondMomentModel model;
    model.provenance = MomentProvenance::UniformConstant;
    model.m = Matrix(n_contexts, n_actions, constant);
    return model;
}

double true_utility(const Policy& p, const Environment& env) {
    if (p.contexts() != env.contexts() || p.actions() != env.actions())
        fail("ShapeMismatch", "policy and environment shapes differ");
    double util = 0.0;
    for (std::size_t x = 0; x < env.contexts(); ++x) {
        double inner = 0.0;
        for (std::size_t a = 0; a < env.actions(); ++a)
            inner += env.mean_reward(x, a) * p.prob(x, a);
        util += env.context_probs[x] * inner;
    }
    return util;
}

}  // namespace mval

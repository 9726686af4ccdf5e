#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "mval/learner.hpp"
#include "mval/rng.hpp"

using namespace mval;

namespace {

// 1 context, 2 actions, scalar features: logit_0 = w, logit_1 = 0.
FeatureSet scalar_feature_context() {
    FeatureContext ctx;
    ctx.user = {1.0};
    ctx.items = Matrix(2, 1);
    ctx.items(0, 0) = 1.0;
    ctx.items(1, 0) = 0.0;
    return {ctx};
}

FeatureSet random_features(std::mt19937_64& rng, std::size_t n_contexts,
                           std::size_t n_actions, std::size_t user_dim,
                           std::size_t item_dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    FeatureSet out;
    for (std::size_t x = 0; x < n_contexts; ++x) {
        FeatureContext ctx;
        ctx.user.resize(user_dim);
        for (double& v : ctx.user) v = normal(rng);
        ctx.items = Matrix(n_actions, item_dim);
        for (double& v : ctx.items.data) v = normal(rng);
        out.push_back(std::move(ctx));
    }
    return out;
}

Matrix row_matrix(std::initializer_list<double> values) {
    Matrix m(1, values.size());
    std::size_t i = 0;
    for (double v : values) m.data[i++] = v;
    return m;
}

}  // namespace

TEST_CASE("featurize is the row-major outer product") {
    SUBCASE("basis times basis hits a single coordinate") {
        const std::vector<double> u = {1.0, 0.0};
        const std::vector<double> item = {0.0, 1.0};
        const std::vector<double> phi = featurize(u, item);
        REQUIRE(phi.size() == 4);
        CHECK(phi[0] == 0.0);
        CHECK(phi[1] == 1.0);  // index (0, 1)
        CHECK(phi[2] == 0.0);
        CHECK(phi[3] == 0.0);
    }
    SUBCASE("zero user vector gives the zero feature") {
        const std::vector<double> u = {0.0, 0.0, 0.0};
        const std::vector<double> item = {1.0, 2.0};
        for (double v : featurize(u, item)) CHECK(v == 0.0);
    }
    SUBCASE("ones user broadcasts the item") {
        const std::vector<double> u = {1.0, 1.0, 1.0, 1.0, 1.0};
        const std::vector<double> item = {2.0, 0.0, 0.0, 0.0, 0.0};
        const std::vector<double> phi = featurize(u, item);
        REQUIRE(phi.size() == 25);
        for (std::size_t i = 0; i < 25; ++i)
            CHECK(phi[i] == (i % 5 == 0 ? 2.0 : 0.0));
    }
}

TEST_CASE("policy_from_params softmax behavior") {
    SUBCASE("zero weights give uniform rows") {
        std::mt19937_64 rng = make_rng(41, {1});
        const FeatureSet features = random_features(rng, 3, 4, 5, 5);
        LearnerParams params;
        params.w.assign(25, 0.0);
        const Policy p = policy_from_params(params, features);
        for (double v : p.table.data)
            CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("rows always lie on the simplex") {
        std::mt19937_64 rng = make_rng(42, {2});
        const FeatureSet features = random_features(rng, 4, 5, 5, 5);
        std::normal_distribution<double> normal(0.0, 2.0);
        LearnerParams params;
        params.w.resize(25);
        for (double& v : params.w) v = normal(rng);
        const Policy p = policy_from_params(params, features);
        for (std::size_t x = 0; x < 4; ++x) {
            double sum = 0.0;
            for (std::size_t a = 0; a < 5; ++a) {
                CHECK(p.prob(x, a) >= 0.0);
                sum += p.prob(x, a);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("large weights saturate to the argmax point mass") {
        // Logits scale to (40, 10, 20): well separated but inside the clamp.
        FeatureContext ctx;
        ctx.user = {1.0};
        ctx.items = Matrix(3, 1);
        ctx.items(0, 0) = 0.04;
        ctx.items(1, 0) = 0.01;
        ctx.items(2, 0) = 0.02;
        const FeatureSet features = {ctx};
        LearnerParams base;
        base.w = {1.0};
        LearnerParams scaled;
        scaled.w = {1e3};
        const Policy soft = policy_from_params(base, features);
        const Policy hard = policy_from_params(scaled, features);
        std::size_t argmax = 0;
        for (std::size_t a = 1; a < 3; ++a)
            if (soft.prob(0, a) > soft.prob(0, argmax)) argmax = a;
        CHECK(argmax == 0);
        CHECK(hard.prob(0, argmax) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("precomputed_objective worked value at the uniform point") {
    const FeatureSet features = scalar_feature_context();
    LearnerParams params;
    params.w = {0.0};
    const Policy p_old = uniform_policy(1, 2);
    const Matrix target = row_matrix({0.5, 0.5});
    const SecondMomentModel m = uniform_second_moment(1, 2, 1.0);
    // c = 0.25 per action, every denominator 0.5: value = 2 * 0.25/0.5 = 1.
    const ObjectiveEval eval = precomputed_objective(params, features, p_old, target, m, 0.5);
    CHECK(eval.value == doctest::Approx(1.0).epsilon(1e-14));
    // Symmetric instance: zero gradient.
    CHECK(std::abs(eval.gradient[0]) <= 1e-14);
}

TEST_CASE("precomputed_objective analytic gradient matches central differences") {
    std::mt19937_64 rng = make_rng(44, {4});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> alpha_dist(0.1, 1.0);
    const FeatureSet features = random_features(rng, 3, 4, 3, 3);

    Matrix target(3, 4);
    SecondMomentModel m;
    m.m = Matrix(3, 4);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (std::size_t x = 0; x < 3; ++x) {
        double sum = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            target(x, a) = unit(rng);
            sum += target(x, a);
        }
        for (std::size_t a = 0; a < 4; ++a) target(x, a) /= sum;
    }
    for (double& v : m.m.data) v = unit(rng);

    Matrix old_table(3, 4);
    for (std::size_t x = 0; x < 3; ++x) {
        double sum = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            old_table(x, a) = unit(rng);
            sum += old_table(x, a);
        }
        for (std::size_t a = 0; a < 4; ++a) old_table(x, a) /= sum;
    }
    const Policy p_old = validate_policy(old_table);

    const double h = 1e-5;
    for (int trial = 0; trial < 25; ++trial) {
        LearnerParams params;
        params.w.resize(9);
        for (double& v : params.w) v = normal(rng);
        const double alpha = alpha_dist(rng);

        const ObjectiveEval eval =
            precomputed_objective(params, features, p_old, target, m, alpha);
        for (std::size_t k = 0; k < params.w.size(); ++k) {
            LearnerParams plus = params, minus = params;
            plus.w[k] += h;
            minus.w[k] -= h;
            const double fd =
                (precomputed_objective(plus, features, p_old, target, m, alpha).value -
                 precomputed_objective(minus, features, p_old, target, m, alpha).value) /
                (2.0 * h);
            const double scale = std::max({1.0, std::abs(fd), std::abs(eval.gradient[k])});
            CHECK(std::abs(eval.gradient[k] - fd) / scale <= 1e-5);
        }
    }
}

TEST_CASE("precomputed_objective approaches the log-only limit for small alpha") {
    const FeatureSet features = scalar_feature_context();
    LearnerParams params;
    params.w = {0.7};
    const Policy p_old = validate_policy(row_matrix({0.6, 0.4}));
    const Matrix target = row_matrix({0.5, 0.5});
    const SecondMomentModel m = uniform_second_moment(1, 2, 1.0);

    const double alpha = 1e-6;
    const ObjectiveEval eval = precomputed_objective(params, features, p_old, target, m, alpha);
    const double limit = 0.25 / 0.6 + 0.25 / 0.4;
    CHECK(eval.value == doctest::Approx(limit).epsilon(1e-4));
    CHECK(std::abs(eval.gradient[0]) <= 1e-4);
}

TEST_CASE("precomputed_mval_fit drives a deterministic target to a point mass") {
    const FeatureSet features = scalar_feature_context();
    const Policy p_old = uniform_policy(1, 2);
    const Matrix target = row_matrix({1.0, 0.0});
    const SecondMomentModel m = uniform_second_moment(1, 2, 1.0);
    FitConfig config;
    config.steps = 500;
    config.step_size = 200.0;
    const LearnerParams params =
        precomputed_mval_fit(features, p_old, target, m, 1.0, config);
    const Policy learned = policy_from_params(params, features);
    CHECK(std::abs(learned.prob(0, 0) - 1.0) <= 1e-3);
}

TEST_CASE("precomputed_mval_fit recovers the target when m is constant at alpha 1") {
    const FeatureSet features = scalar_feature_context();
    const Policy p_old = uniform_policy(1, 2);
    const Matrix target = row_matrix({0.7, 0.3});
    const SecondMomentModel m = uniform_second_moment(1, 2, 0.42);
    FitConfig config;
    config.steps = 400;
    config.step_size = 10.0;
    const LearnerParams params =
        precomputed_mval_fit(features, p_old, target, m, 1.0, config);
    const Policy learned = policy_from_params(params, features);
    const double tv = 0.5 * (std::abs(learned.prob(0, 0) - 0.7) +
                             std::abs(learned.prob(0, 1) - 0.3));
    CHECK(tv <= 1e-3);
}

TEST_CASE("precomputed_mval_fit training log is non-increasing and beats uniform") {
    std::mt19937_64 rng = make_rng(45, {5});
    const FeatureSet features = random_features(rng, 4, 3, 3, 3);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    Matrix target(4, 3);
    Matrix old_table(4, 3);
    SecondMomentModel m;
    m.m = Matrix(4, 3);
    for (std::size_t x = 0; x < 4; ++x) {
        double ts = 0.0, os = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            target(x, a) = unit(rng);
            ts += target(x, a);
            old_table(x, a) = unit(rng);
            os += old_table(x, a);
        }
        for (std::size_t a = 0; a < 3; ++a) {
            target(x, a) /= ts;
            old_table(x, a) /= os;
        }
    }
    for (double& v : m.m.data) v = unit(rng);
    const Policy p_old = validate_policy(old_table);

    FitConfig config;
    config.steps = 150;
    const LearnerParams params =
        precomputed_mval_fit(features, p_old, target, m, 0.4, config);
    REQUIRE(params.training_log.size() >= 2);
    for (std::size_t i = 1; i < params.training_log.size(); ++i)
        CHECK(params.training_log[i] <= params.training_log[i - 1] + 1e-12);

    LearnerParams zero;
    zero.w.assign(9, 0.0);
    const double uniform_value =
        precomputed_objective(zero, features, p_old, target, m, 0.4).value;
    CHECK(params.training_log.back() <= uniform_value + 1e-12);
}

TEST_CASE("erm_balanced_fit with zero rewards returns the initial parameters") {
    const FeatureSet features = scalar_feature_context();
    const Policy p = uniform_policy(1, 2);
    LoggedDataset data;
    data.log_policy = p;
    data.aug_policy = p;
    data.samples = {{0, 0, 0.0, Source::Log}, {0, 1, 0.0, Source::Aug}};
    const LearnerParams params =
        erm_balanced_fit(data, p, p, MixProfile{1, 1}, features, FitConfig{});
    CHECK(params.w == std::vector<double>{0.0});
    CHECK(params.training_log.front() == 0.0);
}

TEST_CASE("erm_balanced_fit concentrates on the only rewarded action") {
    const FeatureSet features = scalar_feature_context();
    const Policy p = uniform_policy(1, 2);
    LoggedDataset data;
    data.log_policy = p;
    data.aug_policy = p;
    for (int i = 0; i < 100; ++i) {
        data.samples.push_back({0, 0, 1.0, Source::Log});
        data.samples.push_back({0, 1, 0.0, Source::Aug});
    }
    FitConfig config;
    config.steps = 300;
    config.step_size = 100.0;
    const LearnerParams params =
        erm_balanced_fit(data, p, p, MixProfile{100, 100}, features, config);
    const Policy learned = policy_from_params(params, features);
    CHECK(learned.prob(0, 0) >= 0.99);
}

TEST_CASE("erm_balanced_fit never scores below the logging policy on its own log") {
    std::mt19937_64 rng = make_rng(46, {6});
    const FeatureSet features = random_features(rng, 3, 3, 2, 2);
    const Policy p_old = uniform_policy(3, 3);
    const Policy p_aug = uniform_policy(3, 3);
    LoggedDataset data;
    data.log_policy = p_old;
    data.aug_policy = p_aug;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, 2);
    for (int i = 0; i < 60; ++i)
        data.samples.push_back({pick(rng), pick(rng), unit(rng) < 0.3 ? 1.0 : 0.0,
                                i % 2 == 0 ? Source::Log : Source::Aug});
    const MixProfile mix = data.counts();

    const LearnerParams params =
        erm_balanced_fit(data, p_old, p_aug, mix, features, FitConfig{});
    const Policy learned = policy_from_params(params, features);

    // Balanced value of a policy on this log.
    const Policy balanced = mix_policies(p_old, p_aug, mix);
    auto value_of = [&](const Policy& p) {
        double total = 0.0;
        for (const auto& s : data.samples)
            total += p.prob(s.context_id, s.action_id) /
                     balanced.prob(s.context_id, s.action_id) * s.reward;
        return total / static_cast<double>(data.samples.size());
    };
    CHECK(value_of(learned) >= value_of(p_old) - 1e-12);
}

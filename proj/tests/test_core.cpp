#include <doctest.h>

#include <limits>

#include "helpers.hpp"
#include "mval/core.hpp"

using namespace mval;

namespace {

Matrix row_matrix(std::initializer_list<double> values) {
    Matrix m(1, values.size());
    std::size_t i = 0;
    for (double v : values) m.data[i++] = v;
    return m;
}

}  // namespace

TEST_CASE("validate_policy accepts an exact simplex row unchanged") {
    const Policy p = validate_policy(row_matrix({0.5, 0.5}));
    CHECK(p.prob(0, 0) == 0.5);
    CHECK(p.prob(0, 1) == 0.5);
}

TEST_CASE("validate_policy renormalizes rows within tolerance to exact sum 1") {
    const Policy p = validate_policy(row_matrix({0.5, 0.5 + 1e-10}));
    CHECK(p.prob(0, 0) + p.prob(0, 1) == 1.0);
    CHECK(p.prob(0, 1) >= p.prob(0, 0));
}

TEST_CASE("validate_policy rejects rows far from the simplex") {
    CHECK(error_token([] { validate_policy(row_matrix({0.7, 0.7})); }) ==
          "RowSumOutOfTolerance");
}

TEST_CASE("validate_policy rejects negative and non-finite entries") {
    CHECK(error_token([] { validate_policy(row_matrix({-0.1, 1.1})); }) ==
          "NegativeEntry");
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(error_token([inf] { validate_policy(row_matrix({inf, 0.0})); }) ==
          "NonFiniteEntry");
}

TEST_CASE("mix_policies identity cases and midpoint") {
    const Policy p_old = validate_policy(row_matrix({0.9, 0.1}));
    const Policy p_aug = validate_policy(row_matrix({0.1, 0.9}));

    SUBCASE("alpha = 0 returns the log policy") {
        const Policy mixed = mix_policies(p_old, p_aug, MixProfile{5, 0});
        CHECK(mixed.prob(0, 0) == 0.9);
        CHECK(mixed.prob(0, 1) == 0.1);
    }
    SUBCASE("alpha = 1 returns the augmentation policy") {
        const Policy mixed = mix_policies(p_old, p_aug, MixProfile{0, 5});
        CHECK(mixed.prob(0, 0) == 0.1);
        CHECK(mixed.prob(0, 1) == 0.9);
    }
    SUBCASE("alpha = 0.5 is the entrywise midpoint") {
        const Policy mixed = mix_policies(p_old, p_aug, MixProfile{3, 3});
        CHECK(mixed.prob(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(mixed.prob(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("mix_policies matches a two-point convex combination oracle") {
    const Policy p_old = validate_policy(row_matrix({0.25, 0.75}));
    const Policy p_aug = validate_policy(row_matrix({0.6, 0.4}));
    for (std::int64_t n_aug = 0; n_aug <= 10; ++n_aug) {
        const MixProfile mix{10 - n_aug, n_aug};
        const Policy mixed = mix_policies(p_old, p_aug, mix);
        const double a = mix.alpha();
        for (std::size_t j = 0; j < 2; ++j) {
            const double expected = (1.0 - a) * p_old.prob(0, j) + a * p_aug.prob(0, j);
            CHECK(mixed.prob(0, j) == doctest::Approx(expected).epsilon(1e-15));
        }
    }
}

TEST_CASE("second_moment for Bernoulli cells equals the mean") {
    Matrix r(1, 2);
    r(0, 0) = 0.3;
    r(0, 1) = 0.8;
    const Environment env = make_bernoulli_environment({1.0}, r);
    const SecondMomentModel m = second_moment(env);
    CHECK(m(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(m(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(m.provenance == MomentProvenance::ExactFromEnv);
}

TEST_CASE("second_moment handles deterministic and high-variance cells") {
    Environment env;
    env.context_probs = {1.0};
    env.mean_reward = row_matrix({1.0, 0.5});
    env.reward_variance = row_matrix({0.0, 0.75});
    env.reward_kind = RewardKind::FixedGaussian;
    const SecondMomentModel m = second_moment(env);
    CHECK(m(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("true_utility on simple instances") {
    Matrix r(1, 2);
    r(0, 0) = 0.8;
    r(0, 1) = 0.2;
    const Environment env = make_bernoulli_environment({1.0}, r);

    SUBCASE("deterministic policy on the max-reward action") {
        const Policy p = validate_policy(row_matrix({1.0, 0.0}));
        CHECK(true_utility(p, env) == doctest::Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("uniform policy averages the row") {
        const Policy p = validate_policy(row_matrix({0.5, 0.5}));
        CHECK(true_utility(p, env) == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("true_utility of the uniform policy over uniform contexts is the grand mean") {
    Matrix r(2, 3);
    const double cells[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    r.data.assign(cells, cells + 6);
    const Environment env = make_bernoulli_environment({0.5, 0.5}, r);
    const Policy p = uniform_policy(2, 3);
    CHECK(true_utility(p, env) == doctest::Approx(0.35).epsilon(1e-14));
}

TEST_CASE("MixProfile validates counts and derives alpha from integers") {
    const MixProfile mix{900, 100};
    CHECK(mix.n() == 1000);
    CHECK(mix.alpha() == doctest::Approx(0.1).epsilon(1e-16));
    CHECK(error_token([] { MixProfile{-1, 2}.validate(); }) == "NegativeCount");
    CHECK(error_token([] { MixProfile{0, 0}.validate(); }) == "EmptyMix");
}

TEST_CASE("LoggedDataset counts samples per source and validates ids") {
    LoggedDataset data;
    data.log_policy = uniform_policy(2, 2);
    data.aug_policy = uniform_policy(2, 2);
    data.samples = {{0, 0, 1.0, Source::Log},
                    {1, 1, 0.0, Source::Log},
                    {0, 1, 1.0, Source::Aug}};
    const MixProfile counts = data.counts();
    CHECK(counts.n_log == 2);
    CHECK(counts.n_aug == 1);
    CHECK_NOTHROW(data.validate(2, 2));

    const MixProfile wrong{1, 2};
    CHECK(error_token([&] { data.validate(2, 2, &wrong); }) == "CountMismatch");

    data.samples.push_back({5, 0, 0.0, Source::Log});
    CHECK(error_token([&] { data.validate(2, 2); }) == "UnknownContext");
}

TEST_CASE("environment validation enforces the context simplex and Bernoulli law") {
    Matrix r(1, 1);
    r(0, 0) = 0.4;
    CHECK(error_token([&] { make_bernoulli_environment({0.7}, r); }) ==
          "RowSumOutOfTolerance");

    Environment env = make_bernoulli_environment({1.0}, r);
    CHECK(env.reward_variance(0, 0) == doctest::Approx(0.24).epsilon(1e-15));
    env.reward_variance(0, 0) = 0.5;  // no longer rbar * (1 - rbar)
    CHECK(error_token([&] { env.validate(); }) == "InconsistentVariance");
}

TEST_CASE("uniform_second_moment fills a constant table") {
    const SecondMomentModel m = uniform_second_moment(2, 3, 0.25);
    CHECK(m.m.rows == 2);
    CHECK(m.m.cols == 3);
    for (double v : m.m.data) CHECK(v == 0.25);
    CHECK(m.provenance == MomentProvenance::UniformConstant);
}

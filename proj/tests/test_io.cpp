#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "helpers.hpp"
#include "mval/io.hpp"

using namespace mval;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("mval_io_test_" + name)).string();
}

Matrix row_matrix(std::initializer_list<double> values) {
    Matrix m(1, values.size());
    std::size_t i = 0;
    for (double v : values) m.data[i++] = v;
    return m;
}

struct FileGuard {
    std::string path;
    ~FileGuard() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("format_double renders doubles with full round-trip precision") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
    const double v = 0.1 + 0.2;
    CHECK(std::stod(format_double(v)) == v);
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("environment document round trip preserves every field") {
    EnvironmentDocument doc;
    Matrix r(2, 3);
    const double cells[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    r.data.assign(cells, cells + 6);
    doc.environment = make_bernoulli_environment({0.25, 0.75}, r);
    doc.policies.emplace("log", uniform_policy(2, 3));
    doc.policies.emplace("target", validate_policy([] {
                             Matrix t(2, 3);
                             const double v[] = {0.5, 0.25, 0.25, 0.1, 0.1, 0.8};
                             t.data.assign(v, v + 6);
                             return t;
                         }()));

    const FileGuard guard{temp_path("env.json")};
    save_environment_document(doc, guard.path);
    const EnvironmentDocument loaded = load_environment_document(guard.path);

    CHECK(loaded.environment.contexts() == 2);
    CHECK(loaded.environment.actions() == 3);
    CHECK(loaded.environment.reward_kind == RewardKind::Bernoulli);
    CHECK(loaded.environment.context_probs == doc.environment.context_probs);
    CHECK(loaded.environment.mean_reward.data == doc.environment.mean_reward.data);
    CHECK(loaded.policy("log").table.data == doc.policy("log").table.data);
    CHECK(loaded.policy("target").table.data == doc.policy("target").table.data);
    CHECK(error_token([&] { loaded.policy("nope"); }) == "MissingPolicy");
}

TEST_CASE("environment loading rejects missing files and unknown reward kinds") {
    CHECK(error_token([] { load_environment_document("/nonexistent/env.json"); }) ==
          "FileNotFound");

    const FileGuard guard{temp_path("bad_kind.json")};
    write_text_file(guard.path,
                    R"({"contexts":1,"actions":2,"context_probs":[1.0],)"
                    R"("mean_reward":[[0.5,0.5]],"reward_kind":"poisson"})");
    CHECK(error_token([&] { load_environment_document(guard.path); }) ==
          "UnknownRewardKind");

    const FileGuard malformed{temp_path("malformed.json")};
    write_text_file(malformed.path, "{not json");
    CHECK(error_token([&] { load_environment_document(malformed.path); }) ==
          "MalformedJson");
}

TEST_CASE("policy json round trip") {
    const Policy p = validate_policy(row_matrix({0.3, 0.7}));
    const FileGuard guard{temp_path("policy.json")};
    save_policy_json(p, guard.path);
    const Policy loaded = load_policy_json(guard.path);
    CHECK(loaded.table.data == p.table.data);
}

TEST_CASE("dataset csv round trip and validation") {
    LoggedDataset data;
    data.log_policy = uniform_policy(1, 2);
    data.samples = {{0, 1, 0.5, Source::Log}, {0, 0, 1.0, Source::Aug}};
    const FileGuard guard{temp_path("data.csv")};
    save_dataset_csv(data, guard.path);
    const LoggedDataset loaded = load_dataset_csv(guard.path);
    REQUIRE(loaded.samples.size() == 2);
    CHECK(loaded.samples[0].context_id == 0);
    CHECK(loaded.samples[0].action_id == 1);
    CHECK(loaded.samples[0].reward == 0.5);
    CHECK(loaded.samples[0].source == Source::Log);
    CHECK(loaded.samples[1].source == Source::Aug);

    const FileGuard bad{temp_path("bad.csv")};
    write_text_file(bad.path, "a,b,c\n");
    CHECK(error_token([&] { load_dataset_csv(bad.path); }) == "MalformedCsv");

    const FileGuard bad_source{temp_path("bad_source.csv")};
    write_text_file(bad_source.path,
                    "context_id,action_id,reward,source\n0,0,1,web\n");
    CHECK(error_token([&] { load_dataset_csv(bad_source.path); }) == "MalformedCsv");
}

TEST_CASE("variance report json exposes the value and both components") {
    VarianceReport report;
    report.value = 0.75;
    report.expectation_term = 1.0;
    report.r_squared_term = 0.25;
    report.formula = VarianceFormula::Balanced;
    const std::string json = variance_report_json(report);
    CHECK(json.find("\"value\": 0.75") != std::string::npos);
    CHECK(json.find("\"expectation_term\": 1.0") != std::string::npos);
    CHECK(json.find("\"r_squared_term\": 0.25") != std::string::npos);
    CHECK(json.find("\"formula\": \"balanced\"") != std::string::npos);
}

TEST_CASE("feature documents load user and item blocks") {
    const FileGuard guard{temp_path("features.json")};
    write_text_file(guard.path,
                    R"({"contexts":[{"u":[1.0,2.0],"items":[[0.5,0.5],[1.0,0.0]]}]})");
    const FeatureSet features = load_features_json(guard.path);
    REQUIRE(features.size() == 1);
    CHECK(features[0].user == std::vector<double>{1.0, 2.0});
    CHECK(features[0].actions() == 2);
    CHECK(features[0].cross_dim() == 4);
    CHECK(features[0].items(1, 0) == 1.0);
}

TEST_CASE("learner params json serialization") {
    LearnerParams params;
    params.w = {0.5, -1.25};
    const FileGuard guard{temp_path("params.json")};
    save_learner_params_json(params, guard.path);
    const std::string content = [&] {
        std::ifstream in(guard.path);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    CHECK(content.find("\"w\"") != std::string::npos);
    CHECK(content.find("-1.25") != std::string::npos);
}

TEST_CASE("sweep config parsing covers all modes") {
    const FileGuard eta{temp_path("eta.json")};
    write_text_file(eta.path,
                    R"({"mode":"eta_sweep","eta_grid":[0.0,1.0,4.0],"delta":0.4,)"
                    R"("n_log":900,"n_aug":100,"trials":50,"repeats":20,"seed":3})");
    const SweepConfig cfg = load_sweep_config(eta.path);
    CHECK(cfg.mode == SweepMode::Eta);
    CHECK(cfg.grid == std::vector<double>{0.0, 1.0, 4.0});
    CHECK(cfg.delta == 0.4);
    CHECK(cfg.n_log == 900);
    CHECK(cfg.n_aug == 100);
    CHECK(cfg.trials == 50);
    CHECK(cfg.repeats == 20);
    CHECK(cfg.seed == 3);

    const FileGuard delta{temp_path("delta.json")};
    write_text_file(delta.path, R"({"mode":"delta_sweep","delta_grid":[0.2,1.0]})");
    CHECK(load_sweep_config(delta.path).mode == SweepMode::Delta);

    const FileGuard multi{temp_path("multi.json")};
    write_text_file(multi.path, R"({"mode":"multi","eta":4.0})");
    CHECK(load_sweep_config(multi.path).mode == SweepMode::Multi);

    const FileGuard bad{temp_path("bad_mode.json")};
    write_text_file(bad.path, R"({"mode":"grid"})");
    CHECK(error_token([&] { load_sweep_config(bad.path); }) == "UnknownMode");
}

TEST_CASE("sweep rows render to the pinned CSV schema") {
    std::vector<SweepRow> rows(2);
    rows[0] = {0.0, "mval", 0.5, 0.125};
    rows[1] = {4.0, "uniform", 1.0, 0.25};
    const std::string csv = sweep_rows_csv(rows);
    CHECK(csv == "grid_value,strategy,variance,stderr\n"
                 "0,mval,0.5,0.125\n"
                 "4,uniform,1,0.25\n");
    const std::string json = sweep_rows_json(rows);
    CHECK(json.find("\"strategy\": \"mval\"") != std::string::npos);
    CHECK(json.find("\"grid_value\": 4.0") != std::string::npos);
}

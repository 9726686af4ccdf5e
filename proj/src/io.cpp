#include "mval/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mval {

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail("MalformedJson", path + ": " + e.what());
    }
    return doc;
}

Matrix matrix_from_json(const json& rows) {
    if (!rows.is_array() || rows.empty() || !rows.front().is_array())
        fail("MalformedJson", "expected a non-empty array of arrays");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < m.rows; ++r) {
        const auto& row = rows.at(r);
        if (row.size() != m.cols)
            fail("MalformedJson", "ragged matrix rows");
        for (std::size_t c = 0; c < m.cols; ++c)
            m(r, c) = row.at(c).get<double>();
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("FileWriteError", "cannot write " + path);
    out << content;
}

const Policy& EnvironmentDocument::policy(const std::string& name) const {
    const auto it = policies.find(name);
    if (it == policies.end())
        fail("MissingPolicy", "environment document has no policy named '" + name + "'");
    return it->second;
}

EnvironmentDocument load_environment_document(const std::string& path) {
    const json doc = load_json_file(path);
    EnvironmentDocument out;

    const auto contexts = doc.at("contexts").get<std::size_t>();
    const auto actions = doc.at("actions").get<std::size_t>();
    out.environment.context_probs = doc.at("context_probs").get<std::vector<double>>();
    out.environment.mean_reward = matrix_from_json(doc.at("mean_reward"));
    if (out.environment.mean_reward.rows != contexts ||
        out.environment.mean_reward.cols != actions)
        fail("ShapeMismatch", "mean_reward shape disagrees with contexts/actions");

    const auto kind = doc.at("reward_kind").get<std::string>();
    if (kind == "bernoulli") {
        out.environment =
            make_bernoulli_environment(std::move(out.environment.context_probs),
                                       std::move(out.environment.mean_reward));
    } else if (kind == "fixed_gaussian") {
        out.environment.reward_kind = RewardKind::FixedGaussian;
        const double sigma = doc.at("reward_stddev").get<double>();
        out.environment.reward_variance = Matrix(contexts, actions, sigma * sigma);
        out.environment.validate();
    } else {
        fail("UnknownRewardKind", "reward_kind must be bernoulli or fixed_gaussian");
    }

    if (doc.contains("policies")) {
        for (const auto& [name, table] : doc.at("policies").items()) {
            Policy p = validate_policy(matrix_from_json(table));
            if (p.contexts() != contexts || p.actions() != actions)
                fail("ShapeMismatch", "policy '" + name + "' shape disagrees with env");
            out.policies.emplace(name, std::move(p));
        }
    }
    return out;
}

void save_environment_document(const EnvironmentDocument& doc, const std::string& path) {
    json j;
    j["contexts"] = doc.environment.contexts();
    j["actions"] = doc.environment.actions();
    j["context_probs"] = doc.environment.context_probs;
    j["mean_reward"] = matrix_to_json(doc.environment.mean_reward);
    if (doc.environment.reward_kind == RewardKind::Bernoulli) {
        j["reward_kind"] = "bernoulli";
    } else {
        j["reward_kind"] = "fixed_gaussian";
        j["reward_stddev"] = std::sqrt(doc.environment.reward_variance(0, 0));
    }
    json policies;
    for (const auto& [name, p] : doc.policies) policies[name] = matrix_to_json(p.table);
    j["policies"] = std::move(policies);
    write_text_file(path, j.dump(2) + "\n");
}

Policy load_policy_json(const std::string& path) {
    const json doc = load_json_file(path);
    if (doc.is_array()) return validate_policy(matrix_from_json(doc));
    return validate_policy(matrix_from_json(doc.at("policy")));
}

void save_policy_json(const Policy& p, const std::string& path) {
    json j;
    j["policy"] = matrix_to_json(p.table);
    write_text_file(path, j.dump(2) + "\n");
}

LoggedDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "context_id,action_id,reward,source")
        fail("MalformedCsv", "expected header context_id,action_id,reward,source");

    LoggedDataset data;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        LoggedSample s;
        std::getline(ss, field, ',');
        s.context_id = static_cast<std::size_t>(std::stoull(field));
        std::getline(ss, field, ',');
        s.action_id = static_cast<std::size_t>(std::stoull(field));
        std::getline(ss, field, ',');
        s.reward = std::stod(field);
        std::getline(ss, field, ',');
        if (field == "log")
            s.source = Source::Log;
        else if (field == "aug")
            s.source = Source::Aug;
        else
            fail("MalformedCsv", "source must be log or aug, got '" + field + "'");
        data.samples.push_back(s);
    }
    return data;
}

void save_dataset_csv(const LoggedDataset& data, const std::string& path) {
    std::ostringstream out;
    out << "context_id,action_id,reward,source\n";
    for (const auto& s : data.samples)
        out << s.context_id << ',' << s.action_id << ',' << format_double(s.reward)
            << ',' << (s.source == Source::Log ? "log" : "aug") << '\n';
    write_text_file(path, out.str());
}

std::string variance_report_json(const VarianceReport& report) {
    json j;
    j["value"] = report.value;
    j["expectation_term"] = report.expectation_term;
    j["r_squared_term"] = report.r_squared_term;
    switch (report.formula) {
        case VarianceFormula::Ips: j["formula"] = "ips"; break;
        case VarianceFormula::Balanced: j["formula"] = "balanced"; break;
        case VarianceFormula::Bound: j["formula"] = "bound"; break;
    }
    return j.dump(2) + "\n";
}

FeatureSet load_features_json(const std::string& path) {
    const json doc = load_json_file(path);
    FeatureSet features;
    for (const auto& ctx : doc.at("contexts")) {
        FeatureContext fc;
        fc.user = ctx.at("u").get<std::vector<double>>();
        fc.items = matrix_from_json(ctx.at("items"));
        features.push_back(std::move(fc));
    }
    if (features.empty()) fail("EmptyTable", "feature document has no contexts");
    return features;
}

void save_learner_params_json(const LearnerParams& params, const std::string& path) {
    json j;
    j["w"] = params.w;
    write_text_file(path, j.dump(2) + "\n");
}

SweepConfig load_sweep_config(const std::string& path) {
    const json doc = load_json_file(path);
    SweepConfig cfg;
    const auto mode = doc.at("mode").get<std::string>();
    if (mode == "eta_sweep") {
        cfg.mode = SweepMode::Eta;
        cfg.grid = doc.at("eta_grid").get<std::vector<double>>();
    } else if (mode == "delta_sweep") {
        cfg.mode = SweepMode::Delta;
        cfg.grid = doc.at("delta_grid").get<std::vector<double>>();
    } else if (mode == "multi") {
        cfg.mode = SweepMode::Multi;
    } else {
        fail("UnknownMode", "mode must be eta_sweep, delta_sweep or multi");
    }
    if (doc.contains("eta")) cfg.eta = doc.at("eta").get<double>();
    if (doc.contains("delta")) cfg.delta = doc.at("delta").get<double>();
    if (doc.contains("n_log")) cfg.n_log = doc.at("n_log").get<std::int64_t>();
    if (doc.contains("n_aug")) cfg.n_aug = doc.at("n_aug").get<std::int64_t>();
    if (doc.contains("trials")) cfg.trials = doc.at("trials").get<int>();
    if (doc.contains("repeats")) cfg.repeats = doc.at("repeats").get<int>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("contexts")) cfg.n_contexts = doc.at("contexts").get<std::size_t>();
    if (doc.contains("actions")) cfg.n_actions = doc.at("actions").get<std::size_t>();
    if (doc.contains("exact_second_moment"))
        cfg.exact_second_moment = doc.at("exact_second_moment").get<bool>();
    if (doc.contains("strategies"))
        cfg.strategies = doc.at("strategies").get<std::vector<std::string>>();
    return cfg;
}

std::string sweep_rows_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "grid_value,strategy,variance,stderr\n";
    for (const auto& row : rows)
        out << format_double(row.grid_value) << ',' << row.strategy << ','
            << format_double(row.variance) << ',' << format_double(row.stderr_) << '\n';
    return out.str();
}

std::string sweep_rows_json(const std::vector<SweepRow>& rows) {
    json arr = json::array();
    for (const auto& row : rows) {
        json j;
        j["grid_value"] = row.grid_value;
        j["strategy"] = row.strategy;
        j["variance"] = row.variance;
        j["stderr"] = row.stderr_;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

}  // namespace mval

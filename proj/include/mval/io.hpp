#pragma once

#include <map>
#include <string>

#include "mval/core.hpp"
#include "mval/estimators.hpp"
#include "mval/learner.hpp"
#include "mval/sim.hpp"

namespace mval {

// The environment JSON document bundles the ground truth with named policies:
// {"contexts": K, "actions": D, "context_probs": [...], "mean_reward": [[...]],
//  "reward_kind": "bernoulli", "policies": {"log": [[...]], "target": [[...]]}}
struct EnvironmentDocument {
    Environment environment;
    std::map<std::string, Policy> policies;

    const Policy& policy(const std::string& name) const;
};

EnvironmentDocument load_environment_document(const std::string& path);
void save_environment_document(const EnvironmentDocument& doc, const std::string& path);

Policy load_policy_json(const std::string& path);
void save_policy_json(const Policy& p, const std::string& path);

// LoggedDataset CSV: header `context_id,action_id,reward,source`,
// source in {log, aug}.
LoggedDataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const LoggedDataset& data, const std::string& path);

std::string variance_report_json(const VarianceReport& report);

FeatureSet load_features_json(const std::string& path);
void save_learner_params_json(const LearnerParams& params, const std::string& path);

SweepConfig load_sweep_config(const std::string& path);
// One row per grid point x strategy: grid_value,strategy,variance,stderr.
std::string sweep_rows_csv(const std::vector<SweepRow>& rows);
std::string sweep_rows_json(const std::vector<SweepRow>& rows);

// Fixed-format double rendering used everywhere output must be byte-stable.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mval

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "recourse/common/serialization.hpp"
#include "recourse/data/dataset.hpp"
#include "recourse/data/schema.hpp"
#include "recourse/data/synthetic.hpp"
#include "recourse/explain/metrics.hpp"
#include "recourse/mdp/cfe_mdp.hpp"
#include "recourse/mdp/toy.hpp"
#include "recourse/model/classifier.hpp"
#include "recourse/service/service.hpp"
#include "recourse/solvers/policy.hpp"
#include "recourse/solvers/ppo.hpp"

namespace recourse::service {

struct ExplainOptions {
  std::string split = "test";   // train, val, test or train+test
  std::string method = "policy"; // policy, greedy or random
  std::size_t step_cap = 200;
  std::size_t threads = 1;
};

// Everything a CLI run needs. Relative paths in a config file resolve
// against the file's directory. Either `schema_path` + `dataset_path`, or
// `synthetic`, or `toy` selects the problem.
struct RunConfig {
  std::string schema_path;
  std::string dataset_path;
  std::optional<data::SyntheticOptions> synthetic;
  std::optional<mdp::ToyFixture> toy;
  data::SplitOptions split;
  std::string classifier_path;  // default <out_dir>/classifier.json
  std::string policy_path;      // default <out_dir>/policy.json
  std::string report_path;      // served by GET /metrics when set
  model::ClassifierTrainOptions classifier;
  mdp::RewardConfig reward;
  solvers::PpoConfig ppo;
  ExplainOptions explain;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  std::string resolved_classifier_path() const;
  std::string resolved_policy_path() const;
};

// Unknown keys and malformed values are ConfigError.
RunConfig run_config_from_json(const json& node, const std::string& base_dir = {});
RunConfig load_run_config(const std::string& path);
// Reseeds the classifier and PPO runs and the rollouts from one seed.
void apply_seed(RunConfig& cfg, std::uint64_t seed);

struct Workspace {
  data::SchemaDocument document;
  data::Dataset dataset;
};

// Loads (or generates) the schema document and the split dataset.
Workspace load_workspace(const RunConfig& cfg);
// Row indices of a named split ("train+test" concatenates both).
std::vector<std::size_t> split_rows(const data::Dataset& ds, const std::string& split);

// Throws ArtifactMismatch when the classifier artifact is missing or was
// trained against another schema.
std::shared_ptr<const model::MlpClassifier> load_classifier_for(const RunConfig& cfg, const Workspace& ws);
std::shared_ptr<mdp::CfeMdp> build_cfe_mdp(const RunConfig& cfg, const Workspace& ws,
                                           std::shared_ptr<const model::Classifier> clf);
// Throws ArtifactMismatch when the policy artifact is missing.
std::shared_ptr<const solvers::PolicyArtifact> load_policy_for(const RunConfig& cfg);
std::unique_ptr<solvers::Policy> make_policy(const std::string& method, const RunConfig& cfg);

// Schema document text for a toy MDP (features plus causal section).
std::string toy_schema_text(const mdp::ToyMdp& toy);

// Report JSON without the wall-clock fields, so reruns are byte-identical.
json deterministic_report(const explain::EvalReport& report);

struct ToyVerification {
  mdp::ToyFixture fixture;
  double optimal_mean_value = 0.0;  // mean V* over the grid states
  double policy_mean_value = 0.0;   // mean exact value of the greedy PPO policy
  double gap = 0.0;                 // relative shortfall of the policy
  double reach_rate = 0.0;          // fraction of rollouts that reached the terminal state
  std::size_t vi_iterations = 0;
  double vi_residual = 0.0;
  std::size_t vi_steps_from_origin = 0;  // greedy VI rollout length from the all-zero state
  bool vi_reaches_from_origin = false;
  std::shared_ptr<const solvers::PolicyArtifact> policy;
};

// Solves the toy exactly, trains PPO on uniform grid starts and compares the
// two. Reach rate uses `rollouts_per_start` greedy rollouts from every grid
// state.
ToyVerification verify_toy(mdp::ToyFixture fixture, const solvers::PpoConfig& ppo,
                           std::size_t rollouts_per_start = 20);

// CLI subcommands. Each writes its artifacts under cfg.out_dir, logs a
// human-readable summary to `log` and returns the process exit code.
int run_generate_synthetic(const RunConfig& cfg, std::ostream& log);
int run_train_classifier(const RunConfig& cfg, std::ostream& log);
int run_train_policy(const RunConfig& cfg, std::ostream& log);
int run_explain(const RunConfig& cfg, std::ostream& log);
int run_evaluate(const RunConfig& cfg, std::ostream& log);
int run_toy_verify(const RunConfig& cfg, std::ostream& log);

// Builds the service for `serve`: the toy MDP with its PPO artifact, or the
// CFE MDP with the trained classifier and policy.
std::unique_ptr<RecourseService> make_service(const RunConfig& cfg);

}  // namespace recourse::service

#include "recourse/service/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "recourse/common/error.hpp"
#include "recourse/explain/rollout.hpp"
#include "recourse/solvers/value_iteration.hpp"

namespace recourse::service {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

void reject_unknown_keys(const json& node, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : node.items()) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) throw Error(ErrorCode::kConfigError, "unknown key '" + key + "' in " + where, key);
  }
}

std::string out_file(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

std::string dump_pretty(const json& node) { return node.dump(2) + "\n"; }

}  // namespace

std::string RunConfig::resolved_classifier_path() const {
  return classifier_path.empty() ? (fs::path(out_dir) / "classifier.json").string() : classifier_path;
}

std::string RunConfig::resolved_policy_path() const {
  return policy_path.empty() ? (fs::path(out_dir) / "policy.json").string() : policy_path;
}

RunConfig run_config_from_json(const json& node, const std::string& base_dir) {
  if (!node.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  reject_unknown_keys(node,
                      {"schema", "dataset", "synthetic", "toy", "split", "classifier_artifact", "policy_artifact",
                       "report", "classifier", "reward", "ppo", "explain", "seed", "out"},
                      "config");
  RunConfig cfg;
  try {
    cfg.schema_path = resolve(base_dir, node.value("schema", std::string()));
    cfg.dataset_path = resolve(base_dir, node.value("dataset", std::string()));
    if (node.contains("synthetic")) {
      const json& syn = node["synthetic"];
      reject_unknown_keys(syn, {"rows", "band_sd", "seed"}, "synthetic");
      data::SyntheticOptions opts;
      opts.rows = syn.value("rows", opts.rows);
      opts.band_sd = syn.value("band_sd", opts.band_sd);
      opts.seed = syn.value("seed", opts.seed);
      cfg.synthetic = opts;
    }
    if (node.contains("toy")) {
      const auto name = node["toy"].get<std::string>();
      cfg.toy = mdp::parse_toy_fixture(name);
      if (!cfg.toy) throw Error(ErrorCode::kConfigError, "unknown toy fixture '" + name + "'", "toy");
    }
    if (node.contains("split")) {
      const json& sp = node["split"];
      reject_unknown_keys(sp, {"seed", "train_fraction", "val_fraction"}, "split");
      cfg.split.seed = sp.value("seed", cfg.split.seed);
      cfg.split.train_fraction = sp.value("train_fraction", cfg.split.train_fraction);
      cfg.split.val_fraction = sp.value("val_fraction", cfg.split.val_fraction);
    }
    cfg.classifier_path = resolve(base_dir, node.value("classifier_artifact", std::string()));
    cfg.policy_path = resolve(base_dir, node.value("policy_artifact", std::string()));
    cfg.report_path = resolve(base_dir, node.value("report", std::string()));
    if (node.contains("classifier")) {
      const json& c = node["classifier"];
      reject_unknown_keys(c, {"epochs", "learning_rate", "batch_size", "seed", "hidden"}, "classifier");
      cfg.classifier.epochs = c.value("epochs", cfg.classifier.epochs);
      cfg.classifier.learning_rate = c.value("learning_rate", cfg.classifier.learning_rate);
      cfg.classifier.batch_size = c.value("batch_size", cfg.classifier.batch_size);
      cfg.classifier.seed = c.value("seed", cfg.classifier.seed);
      cfg.classifier.hidden = c.value("hidden", cfg.classifier.hidden);
    }
    if (node.contains("reward")) cfg.reward = mdp::reward_config_from_json(node["reward"]);
    if (node.contains("ppo")) cfg.ppo = solvers::ppo_config_from_json(node["ppo"]);
    if (node.contains("explain")) {
      const json& e = node["explain"];
      reject_unknown_keys(e, {"split", "method", "step_cap", "threads"}, "explain");
      cfg.explain.split = e.value("split", cfg.explain.split);
      cfg.explain.method = e.value("method", cfg.explain.method);
      cfg.explain.step_cap = e.value("step_cap", cfg.explain.step_cap);
      cfg.explain.threads = e.value("threads", cfg.explain.threads);
    }
    cfg.out_dir = resolve(base_dir, node.value("out", cfg.out_dir));
    if (node.contains("seed")) apply_seed(cfg, node["seed"].get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfigError, "cannot read config '" + path + "'");
  }
  const json node = json::parse(text, nullptr, false);
  if (node.is_discarded()) throw Error(ErrorCode::kConfigError, "config '" + path + "' is not valid JSON");
  return run_config_from_json(node, fs::path(path).parent_path().string());
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.classifier.seed = derive_seed(seed, 1);
  cfg.ppo.seed = derive_seed(seed, 2);
}

Workspace load_workspace(const RunConfig& cfg) {
  if (cfg.toy) throw Error(ErrorCode::kConfigError, "toy fixtures have no dataset", "toy");
  if (cfg.synthetic) {
    auto document = data::parse_schema_document(data::synthetic_schema_text());
    auto ds = data::make_synthetic_dataset(*cfg.synthetic, cfg.split);
    return {std::move(document), std::move(ds)};
  }
  if (cfg.schema_path.empty() || cfg.dataset_path.empty()) {
    throw Error(ErrorCode::kConfigError, "config needs 'schema' and 'dataset', 'synthetic' or 'toy'");
  }
  auto document = data::load_schema_document(cfg.schema_path);
  auto ds = data::load_dataset_file(cfg.dataset_path, document.schema, cfg.split);
  return {std::move(document), std::move(ds)};
}

std::vector<std::size_t> split_rows(const data::Dataset& ds, const std::string& split) {
  if (split == "train") return ds.split.train;
  if (split == "val") return ds.split.val;
  if (split == "test") return ds.split.test;
  if (split == "train+test") {
    std::vector<std::size_t> rows = ds.split.train;
    rows.insert(rows.end(), ds.split.test.begin(), ds.split.test.end());
    return rows;
  }
  throw Error(ErrorCode::kConfigError, "unknown split '" + split + "'", "split");
}

std::shared_ptr<const model::MlpClassifier> load_classifier_for(const RunConfig& cfg, const Workspace& ws) {
  const std::string path = cfg.resolved_classifier_path();
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kArtifactMismatch, "classifier artifact '" + path + "' not found; run train-classifier");
  }
  auto clf = std::make_shared<model::MlpClassifier>(model::load_classifier(path));
  if (!clf->schema_fingerprint().empty() && clf->schema_fingerprint() != ws.document.fingerprint) {
    throw Error(ErrorCode::kArtifactMismatch, "classifier artifact '" + path + "' was trained on another schema");
  }
  return clf;
}

std::shared_ptr<mdp::CfeMdp> build_cfe_mdp(const RunConfig& cfg, const Workspace& ws,
                                           std::shared_ptr<const model::Classifier> clf) {
  auto cm = causal::CausalModel::from_json(ws.document.causal_section(), ws.document.schema);
  return mdp::build_mdp(ws.dataset, std::move(clf), std::move(cm), cfg.reward, ws.document.fingerprint);
}

std::shared_ptr<const solvers::PolicyArtifact> load_policy_for(const RunConfig& cfg) {
  const std::string path = cfg.resolved_policy_path();
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kArtifactMismatch, "policy artifact '" + path + "' not found; run train-policy");
  }
  return std::make_shared<solvers::PolicyArtifact>(solvers::load_policy(path));
}

std::unique_ptr<solvers::Policy> make_policy(const std::string& method, const RunConfig& cfg) {
  if (method == "policy") return std::make_unique<solvers::PpoPolicy>(load_policy_for(cfg));
  if (method == "greedy") return std::make_unique<solvers::GreedyBaseline>();
  if (method == "random") return std::make_unique<solvers::RandomBaseline>();
  if (method == "value_iteration") {
    if (!cfg.toy) throw Error(ErrorCode::kConfigError, "value_iteration needs a toy fixture", "method");
    auto toy = std::make_shared<const mdp::ToyMdp>(*cfg.toy);
    return std::make_unique<solvers::TabularPolicyAdapter>(toy, solvers::solve_environment(*toy));
  }
  throw Error(ErrorCode::kConfigError, "unknown method '" + method + "'", "method");
}

std::string toy_schema_text(const mdp::ToyMdp& toy) {
  json doc = data::feature_schema_to_json(toy.schema());
  doc["causal"] = toy.causal_model().to_json(toy.schema());
  return dump_pretty(doc);
}

json deterministic_report(const explain::EvalReport& report) {
  json out = explain::report_to_json(report);
  out.erase("mean_time");
  return out;
}

ToyVerification verify_toy(mdp::ToyFixture fixture, const solvers::PpoConfig& ppo, std::size_t rollouts_per_start) {
  auto toy = std::make_shared<const mdp::ToyMdp>(fixture);
  ToyVerification out;
  out.fixture = fixture;
  const auto vi = solvers::value_iteration(*toy, toy->gamma());
  out.vi_iterations = vi.iterations;
  out.vi_residual = vi.residual;

  solvers::PpoConfig cfg = ppo;
  cfg.gamma = toy->gamma();
  auto artifact =
      std::make_shared<const solvers::PolicyArtifact>(solvers::ppo_train(*toy, solvers::uniform_start_sampler(toy->grid_states()), cfg));
  out.policy = artifact;
  const solvers::PpoPolicy policy(artifact);

  const auto& actions = toy->discrete_actions();
  std::vector<std::size_t> chosen(toy->num_states(), 0);
  for (std::size_t i = 0; i < toy->terminal_index(); ++i) {
    Rng rng(0);
    const Action a = policy.act(*toy, toy->state_at(i), rng);
    const auto it = std::find(actions.begin(), actions.end(), a);
    if (it == actions.end()) throw Error(ErrorCode::kPreconditionViolated, "policy action is not a toy action");
    chosen[i] = static_cast<std::size_t>(it - actions.begin());
  }
  const auto values = solvers::policy_evaluation(*toy, chosen, toy->gamma());
  const std::size_t n = toy->terminal_index();
  for (std::size_t i = 0; i < n; ++i) {
    out.optimal_mean_value += vi.value[i] / static_cast<double>(n);
    out.policy_mean_value += values[i] / static_cast<double>(n);
  }
  out.gap = (out.optimal_mean_value - out.policy_mean_value) / std::abs(out.optimal_mean_value);

  std::size_t reached = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < rollouts_per_start; ++r) {
      Rng rng(derive_seed(cfg.seed, i * rollouts_per_start + r));
      reached += explain::rollout(policy, *toy, toy->state_at(i), toy->step_cap(), rng).valid ? 1 : 0;
    }
  }
  out.reach_rate = static_cast<double>(reached) / static_cast<double>(n * rollouts_per_start);

  const solvers::TabularPolicyAdapter oracle(toy, vi);
  Rng rng(derive_seed(cfg.seed, 0x0a));
  const auto path = explain::rollout(oracle, *toy, toy->state_at(0), toy->step_cap(), rng);
  out.vi_steps_from_origin = path.steps.size();
  out.vi_reaches_from_origin = path.valid;
  return out;
}

int run_generate_synthetic(const RunConfig& cfg, std::ostream& log) {
  const data::SyntheticOptions opts = cfg.synthetic.value_or(data::SyntheticOptions{});
  const auto ds = data::make_synthetic_dataset(opts, cfg.split);
  write_text_file(out_file(cfg, "synthetic.schema.json"), data::synthetic_schema_text());
  std::ostringstream csv;
  data::write_csv(csv, ds);
  write_text_file(out_file(cfg, "synthetic.csv"), csv.str());
  log << "wrote " << ds.size() << " rows to " << out_file(cfg, "synthetic.csv") << "\n";
  return 0;
}

int run_train_classifier(const RunConfig& cfg, std::ostream& log) {
  const Workspace ws = load_workspace(cfg);
  const data::ScalingTransform scaler(ws.dataset.schema);
  const auto clf = model::train_classifier(ws.dataset, scaler, cfg.classifier, ws.document.fingerprint);
  const std::string path = out_file(cfg, "classifier.json");
  model::save_classifier(clf, path);
  const json report = {{"schema_fingerprint", ws.document.fingerprint},
                       {"train_accuracy", model::accuracy(clf, ws.dataset, scaler, ws.dataset.split.train)},
                       {"test_accuracy", clf.test_accuracy()}};
  write_text_file(out_file(cfg, "classifier_report.json"), dump_pretty(report));
  log << "classifier test accuracy " << clf.test_accuracy() << ", saved to " << path << "\n";
  return 0;
}

int run_train_policy(const RunConfig& cfg, std::ostream& log) {
  const Workspace ws = load_workspace(cfg);
  const auto mdp = build_cfe_mdp(cfg, ws, load_classifier_for(cfg, ws));
  const auto starts = solvers::negative_train_states(*mdp, ws.dataset);
  std::size_t batches = 0;
  auto artifact = solvers::ppo_train(*mdp, solvers::uniform_start_sampler(starts), cfg.ppo,
                                     [&](const solvers::TrainingPoint& p) {
                                       if (++batches % 10 == 0) {
                                         log << "steps " << p.env_steps << "  return " << p.mean_episode_return
                                             << "  terminal rate " << p.terminal_rate << "\n";
                                       }
                                     });
  artifact.environment = {{"reward", mdp::reward_config_to_json(cfg.reward)},
                          {"start_states", starts.size()}};
  const std::string path = out_file(cfg, "policy.json");
  solvers::save_policy(artifact, path);
  log << "trained on " << starts.size() << " negative train rows, saved to " << path << "\n";
  return 0;
}

namespace {

struct ExplainSetup {
  std::shared_ptr<const mdp::Environment> env;
  std::vector<State> starts;
  explain::MetricContext ctx;
};

ExplainSetup explain_setup(const RunConfig& cfg) {
  if (cfg.toy) {
    auto toy = std::make_shared<const mdp::ToyMdp>(*cfg.toy);
    auto ctx = explain::metric_context(*toy);
    return {toy, toy->grid_states(), std::move(ctx)};
  }
  const Workspace ws = load_workspace(cfg);
  auto mdp = build_cfe_mdp(cfg, ws, load_classifier_for(cfg, ws));
  auto starts = solvers::negative_states(*mdp, ws.dataset, split_rows(ws.dataset, cfg.explain.split));
  auto ctx = explain::metric_context(*mdp);
  return {mdp, std::move(starts), std::move(ctx)};
}

explain::BatchResult explain_with(const RunConfig& cfg, const ExplainSetup& setup, const std::string& method) {
  const auto policy = make_policy(method, cfg);
  return explain::explain_batch(*policy, *setup.env, setup.ctx, setup.starts, cfg.explain.step_cap,
                                derive_seed(cfg.seed, 3), cfg.explain.threads);
}

std::string split_tag(const RunConfig& cfg) { return cfg.toy ? "grid" : cfg.explain.split; }

}  // namespace

int run_explain(const RunConfig& cfg, std::ostream& log) {
  const ExplainSetup setup = explain_setup(cfg);
  const auto result = explain_with(cfg, setup, cfg.explain.method);
  const std::string stem = cfg.explain.method + "_" + split_tag(cfg);
  std::ostringstream lines;
  explain::write_paths_jsonl(lines, result.paths, setup.env->schema());
  write_text_file(out_file(cfg, "paths_" + stem + ".jsonl"), lines.str());
  write_text_file(out_file(cfg, "report_" + stem + ".json"), dump_pretty(deterministic_report(result.report)));
  write_text_file(out_file(cfg, "timing_" + stem + ".json"),
                  dump_pretty({{"mean_time", result.report.mean_time}}));
  log << explain::report_table({result.report});
  return 0;
}

int run_evaluate(const RunConfig& cfg, std::ostream& log) {
  const ExplainSetup setup = explain_setup(cfg);
  std::vector<explain::EvalReport> reports;
  json all = json::array();
  for (const char* method : {"policy", "greedy", "random"}) {
    reports.push_back(explain_with(cfg, setup, method).report);
    all.push_back(deterministic_report(reports.back()));
  }
  const std::string table = explain::report_table(reports);
  write_text_file(out_file(cfg, "evaluation_" + split_tag(cfg) + ".json"), dump_pretty(all));
  write_text_file(out_file(cfg, "evaluation_" + split_tag(cfg) + ".txt"), table);
  log << table;
  return 0;
}

int run_toy_verify(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.toy) throw Error(ErrorCode::kConfigError, "toy-verify needs a fixture", "fixture");
  const ToyVerification v = verify_toy(*cfg.toy, cfg.ppo);
  solvers::save_policy(*v.policy, out_file(cfg, "policy.json"));
  const bool ok = v.gap <= 0.05 && v.reach_rate >= 0.99;
  const json summary = {{"fixture", std::string(mdp::to_string(v.fixture))},
                        {"value_iteration_mean", v.optimal_mean_value},
                        {"policy_mean", v.policy_mean_value},
                        {"gap", v.gap},
                        {"reach_rate", v.reach_rate},
                        {"value_iteration_iterations", v.vi_iterations},
                        {"value_iteration_steps_from_origin", v.vi_steps_from_origin},
                        {"ok", ok}};
  write_text_file(out_file(cfg, "toy_verify.json"), dump_pretty(summary));
  char line[256];
  std::snprintf(line, sizeof line, "%s: value iteration %.4f, policy %.4f, gap %.2f%%, reach rate %.1f%%\n",
                std::string(mdp::to_string(v.fixture)).c_str(), v.optimal_mean_value, v.policy_mean_value,
                100.0 * v.gap, 100.0 * v.reach_rate);
  log << line;
  return ok ? 0 : 1;
}

std::unique_ptr<RecourseService> make_service(const RunConfig& cfg) {
  std::optional<json> report;
  if (!cfg.report_path.empty()) {
    if (!fs::exists(cfg.report_path)) {
      throw Error(ErrorCode::kArtifactMismatch, "report '" + cfg.report_path + "' not found");
    }
    report = json::parse(read_text_file(cfg.report_path));
  }
  auto policy = std::make_shared<const solvers::PpoPolicy>(load_policy_for(cfg));
  if (cfg.toy) {
    auto toy = std::make_shared<const mdp::ToyMdp>(*cfg.toy);
    return std::make_unique<RecourseService>(toy, policy, toy_schema_text(*toy), std::move(report));
  }
  const Workspace ws = load_workspace(cfg);
  auto mdp = build_cfe_mdp(cfg, ws, load_classifier_for(cfg, ws));
  return std::make_unique<RecourseService>(mdp, policy, ws.document.text, std::move(report));
}

}  // namespace recourse::service

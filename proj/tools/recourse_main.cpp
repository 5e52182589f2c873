// Command-line entry point: training, explanation, evaluation, the toy
// verification and the HTTP service.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "recourse/common/error.hpp"
#include "recourse/service/pipeline.hpp"
#include "recourse/service/service.hpp"

namespace {

using recourse::Error;
using recourse::ErrorCode;
using recourse::json;
namespace svc = recourse::service;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "run configuration (JSON); falls back to $RECOURSE_MDP_CONFIG");
  cmd->add_option("--seed", flags.seed, "seed for training and rollouts");
  cmd->add_option("--out", flags.out, "output directory");
}

svc::RunConfig resolve_config(const CommonFlags& flags) {
  std::string path = flags.config;
  if (path.empty()) {
    if (const char* env = std::getenv("RECOURSE_MDP_CONFIG"); env != nullptr) path = env;
  }
  svc::RunConfig cfg = path.empty() ? svc::RunConfig{} : svc::load_run_config(path);
  if (flags.seed) svc::apply_seed(cfg, *flags.seed);
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  return cfg;
}

void set_fixture(svc::RunConfig& cfg, const std::string& name) {
  if (name.empty()) return;
  cfg.toy = recourse::mdp::parse_toy_fixture(name);
  if (!cfg.toy) throw Error(ErrorCode::kConfigError, "unknown toy fixture '" + name + "'", "fixture");
}

void print_error(const std::string& code, const std::string& message, const std::string& field) {
  const json body = {{"code", code}, {"message", message}, {"field", field.empty() ? json(nullptr) : json(field)}};
  std::cerr << body.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential counterfactual explanations with a learned recourse policy"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* gen = app.add_subcommand("generate-synthetic", "write the synthetic dataset and its schema");
  std::size_t rows = 0;
  gen->add_option("--rows", rows, "number of rows");

  auto* train_clf = app.add_subcommand("train-classifier", "train the MLP classifier");
  auto* train_pol = app.add_subcommand("train-policy", "train the recourse policy with PPO");
  std::size_t steps = 0;
  train_pol->add_option("--steps", steps, "total environment steps");

  auto* explain = app.add_subcommand("explain", "generate paths for the negatives of a split");
  std::string split, method;
  std::size_t threads = 0;
  explain->add_option("--split", split, "train, val, test or train+test");
  explain->add_option("--method", method, "policy, greedy, random or value_iteration (toys)");
  explain->add_option("--threads", threads, "concurrent rollouts");

  auto* evaluate = app.add_subcommand("evaluate", "compare the policy with the baselines");
  evaluate->add_option("--split", split, "train, val, test or train+test");

  auto* serve = app.add_subcommand("serve", "serve the policy over HTTP");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string report;
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");
  serve->add_option("--report", report, "evaluation report served by /metrics");

  auto* toy = app.add_subcommand("toy-verify", "compare value iteration and PPO on a toy MDP");
  toy->add_option("--steps", steps, "PPO environment steps");

  std::string fixture;
  for (auto* cmd : {gen, train_clf, train_pol, explain, evaluate, serve, toy}) add_common(cmd, flags);
  for (auto* cmd : {explain, evaluate, serve, toy}) cmd->add_option("--fixture", fixture, "toy fixture name");

  CLI11_PARSE(app, argc, argv);

  try {
    svc::RunConfig cfg = resolve_config(flags);
    set_fixture(cfg, fixture);
    if (!split.empty()) cfg.explain.split = split;
    if (!method.empty()) cfg.explain.method = method;
    if (threads > 0) cfg.explain.threads = threads;
    if (steps > 0) cfg.ppo.total_env_steps = steps;
    if (!report.empty()) cfg.report_path = report;

    if (gen->parsed()) {
      if (rows > 0) {
        recourse::data::SyntheticOptions opts = cfg.synthetic.value_or(recourse::data::SyntheticOptions{});
        opts.rows = rows;
        cfg.synthetic = opts;
      }
      return svc::run_generate_synthetic(cfg, std::cout);
    }
    if (train_clf->parsed()) return svc::run_train_classifier(cfg, std::cout);
    if (train_pol->parsed()) return svc::run_train_policy(cfg, std::cout);
    if (explain->parsed()) return svc::run_explain(cfg, std::cout);
    if (evaluate->parsed()) return svc::run_evaluate(cfg, std::cout);
    if (toy->parsed()) return svc::run_toy_verify(cfg, std::cout);
    if (serve->parsed()) {
      const auto service = svc::make_service(cfg);
      svc::HttpServer server(*service);
      const int bound = server.bind(host, port);
      std::cout << "serving " << service->environment().fingerprint() << " on http://" << host << ":" << bound
                << std::endl;
      server.run();
      return 0;
    }
  } catch (const Error& e) {
    print_error(std::string(recourse::error_code_name(e.code())), e.what(), e.field());
    return 2;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what(), "");
    return 3;
  }
  return 0;
}

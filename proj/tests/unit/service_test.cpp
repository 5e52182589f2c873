#include <gtest/gtest.h>

#include <httplib.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include "recourse/common/error.hpp"
#include "recourse/mdp/cfe_mdp.hpp"
#include "recourse/mdp/toy.hpp"
#include "recourse/service/pipeline.hpp"
#include "recourse/service/service.hpp"
#include "recourse/solvers/policy.hpp"
#include "recourse/solvers/ppo.hpp"
#include "recourse/solvers/value_iteration.hpp"
#include "test_support.hpp"

using namespace recourse;
using namespace recourse::service;
namespace fs = std::filesystem;
namespace ts = recourse::test_support;

namespace {

json body_of(const HttpResponse& r) { return json::parse(r.body); }

std::string post(const RecourseService& svc, const std::string& route, const json& request, int* status = nullptr) {
  const HttpResponse r = svc.handle("POST", route, request.dump());
  if (status != nullptr) *status = r.status;
  return r.body;
}

// Adult schema, a linear classifier favouring education and hours, random
// rows as the manifold reference, and a briefly trained PPO policy sampled
// stochastically so that it proposes illegal actions too.
struct AdultService {
  data::SchemaDocument doc = data::load_schema_document(ts::source_path("data/adult.schema.json"));
  std::shared_ptr<mdp::CfeMdp> env;
  std::unique_ptr<RecourseService> svc;

  AdultService() {
    std::vector<double> w(doc.schema.size(), 0.0);
    w[doc.schema.require_index("education")] = 0.6;
    w[doc.schema.require_index("hours-per-week")] = 2.0;
    auto clf = std::make_shared<ts::LinearClassifier>(w, -8.0);
    data::Dataset ds = ts::random_dataset(doc.schema, 300, *clf, 7);
    auto cm = causal::CausalModel::from_json(doc.causal_section(), doc.schema);
    env = mdp::build_mdp(ds, clf, std::move(cm), {}, doc.fingerprint);
    solvers::PpoConfig ppo;
    ppo.total_env_steps = 2000;
    ppo.rollout_batch_size = 500;
    ppo.minibatch_size = 100;
    ppo.epochs_per_batch = 2;
    ppo.hidden = {16};
    ppo.episode_step_cap = 40;
    auto artifact = std::make_shared<const solvers::PolicyArtifact>(
        solvers::ppo_train(*env, solvers::uniform_start_sampler(solvers::negative_train_states(*env, ds)), ppo));
    auto policy = std::make_shared<const solvers::PpoPolicy>(artifact, solvers::ActMode::kSample);
    svc = std::make_unique<RecourseService>(env, policy, doc.text);
  }

  json typical_state() const {
    return {{"age", 30},
            {"workclass", "Private"},
            {"fnlwgt", 200000},
            {"education", "HS-grad"},
            {"marital-status", "Never-married"},
            {"occupation", "Sales"},
            {"relationship", "Not-in-family"},
            {"race", "White"},
            {"sex", "Female"},
            {"capital-gain", 0},
            {"capital-loss", 0},
            {"hours-per-week", 40},
            {"native-country", "United-States"}};
  }
};

AdultService& adult() {
  static AdultService instance;
  return instance;
}

struct ToyService {
  std::shared_ptr<const mdp::ToyMdp> toy = std::make_shared<mdp::ToyMdp>(mdp::ToyFixture::kExample1);
  RecourseService svc{toy,
                      std::make_shared<solvers::TabularPolicyAdapter>(toy, solvers::value_iteration(*toy, toy->gamma())),
                      toy_schema_text(*toy), json{{"method", "value_iteration"}, {"validity", 100.0}}};
};

// Numbers equal up to scale/unscale rounding, strings exactly.
void expect_same_state(const json& a, const json& b) {
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [key, value] : a.items()) {
    if (value.is_number()) {
      EXPECT_NEAR(value.get<double>(), b.at(key).get<double>(), 1e-9 * (1.0 + std::abs(value.get<double>()))) << key;
    } else {
      EXPECT_EQ(value, b.at(key)) << key;
    }
  }
}

std::string temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("recourse_service_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST(Service, SchemaIsServedVerbatim) {
  auto& a = adult();
  const HttpResponse r = a.svc->handle("GET", "/schema", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, a.doc.text);
}

TEST(Service, MetricsWithoutAReportIs404) {
  const HttpResponse r = adult().svc->handle("GET", "/metrics", "");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(body_of(r).at("code"), "NotFound");
}

TEST(Service, MetricsReturnsReportAndCounters) {
  ToyService t;
  post(t.svc, "/suggest", {{"state", {{"a", "0"}, {"b", "0"}}}});
  const HttpResponse r = t.svc.handle("GET", "/metrics", "");
  ASSERT_EQ(r.status, 200);
  const json j = body_of(r);
  EXPECT_EQ(j.at("report").at("method"), "value_iteration");
  EXPECT_EQ(j.at("counters").at("suggest"), 1);
}

TEST(Service, UnknownRouteIs404) {
  EXPECT_EQ(adult().svc->handle("GET", "/nope", "").status, 404);
  EXPECT_EQ(adult().svc->handle("GET", "/suggest", "").status, 404);
}

TEST(Service, SuggestOnACounterfactualStateHasNoAction) {
  ToyService t;
  int status = 0;
  const json j = json::parse(post(t.svc, "/suggest", {{"state", {{"a", "2"}, {"b", "2"}}}}, &status));
  EXPECT_EQ(status, 200);
  EXPECT_TRUE(j.at("is_counterfactual").get<bool>());
  EXPECT_TRUE(j.at("action").is_null());
  EXPECT_DOUBLE_EQ(j.at("p_desired").get<double>(), 1.0);
}

TEST(Service, Example1SuggestionHeadsTowardTheGoal) {
  ToyService t;
  const json j = json::parse(post(t.svc, "/suggest", {{"state", {{"a", "0"}, {"b", "0"}}}, {"seed", 3}}));
  ASSERT_FALSE(j.at("action").is_null());
  EXPECT_EQ(j.at("action").at("delta").get<double>(), 1.0);
  const json next = j.at("predicted_next_state");
  EXPECT_EQ(std::stoi(next.at("a").get<std::string>()) + std::stoi(next.at("b").get<std::string>()), 1);
  EXPECT_EQ(j.at("seed"), 3);
  EXPECT_EQ(j.at("step_budget_remaining"), t.toy->step_cap());
}

TEST(Service, UnknownFeatureNamesTheField) {
  auto& a = adult();
  json state = a.typical_state();
  state["height"] = 170;
  int status = 0;
  const json j = json::parse(post(*a.svc, "/suggest", {{"state", state}}, &status));
  EXPECT_EQ(status, 400);
  EXPECT_EQ(j.at("code"), "UnknownColumn");
  EXPECT_EQ(j.at("field"), "height");
}

TEST(Service, MalformedBodyIs400) {
  const HttpResponse r = adult().svc->handle("POST", "/simulate", "{not json");
  EXPECT_EQ(r.status, 400);
  EXPECT_FALSE(body_of(r).at("code").get<std::string>().empty());
}

TEST(Service, AgeDecreaseIsRejected) {
  auto& a = adult();
  int status = 0;
  const json j = json::parse(post(*a.svc, "/simulate",
                                  {{"state", a.typical_state()}, {"action", {{"feature", "age"}, {"delta", -1}}}},
                                  &status));
  EXPECT_EQ(status, 400);
  EXPECT_EQ(j.at("code"), "DisallowedAction");
  EXPECT_EQ(j.at("constraint"), "non_decreasing:age");
  EXPECT_EQ(j.at("field"), "age");
}

TEST(Service, ImmutableChangeIsRejected) {
  auto& a = adult();
  int status = 0;
  const json j = json::parse(post(*a.svc, "/simulate",
                                  {{"state", a.typical_state()}, {"action", {{"feature", "race"}, {"delta", 1}}}},
                                  &status));
  EXPECT_EQ(status, 400);
  EXPECT_EQ(j.at("constraint"), "immutable:race");
}

TEST(Service, IdentityActionIsRejected) {
  auto& a = adult();
  int status = 0;
  post(*a.svc, "/simulate", {{"state", a.typical_state()}, {"action", {{"feature", "capital-gain"}, {"delta", 0}}}},
       &status);
  EXPECT_EQ(status, 400);
}

TEST(Service, EducationStepIsReproducibleUnderASeed) {
  auto& a = adult();
  const json request = {{"state", a.typical_state()}, {"action", {{"feature", "education"}, {"delta", 1}}}};
  std::set<double> ages;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    json r = request;
    r["seed"] = seed;
    const std::string first = post(*a.svc, "/simulate", r);
    EXPECT_EQ(post(*a.svc, "/simulate", r), first);
    const json j = json::parse(first);
    EXPECT_EQ(j.at("next_state").at("education"), "Some-college");
    EXPECT_TRUE(j.at("causal_ok").get<bool>());
    ages.insert(j.at("next_state").at("age").get<double>());
  }
  // Both outcomes of the education -> age edge show up.
  ASSERT_EQ(ages.size(), 2u);
  EXPECT_NEAR(*ages.rbegin() - *ages.begin(), 1.0, 1e-9);
}

TEST(Service, SuggestionsAreAcceptedBySimulateAndReplay) {
  auto& a = adult();
  const auto& schema = a.doc.schema;
  ts::Gen gen(99);
  const mdp::StateCodec codec(schema);
  int with_action = 0;
  for (int i = 0; i < 150; ++i) {
    State s(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& f = schema.feature(j);
      s[j] = f.is_numerical() ? gen.uniform(-1, 1) : static_cast<double>(gen.index(f.categories.size()));
    }
    const json state = codec.state_to_json(s);
    const std::uint64_t seed = gen.index(1000);
    int status = 0;
    const json suggestion = json::parse(post(*a.svc, "/suggest", {{"state", state}, {"seed", seed}}, &status));
    ASSERT_EQ(status, 200) << suggestion.dump();
    if (suggestion.at("action").is_null()) {
      EXPECT_TRUE(suggestion.at("is_counterfactual").get<bool>());
      continue;
    }
    ++with_action;
    const json sim = json::parse(
        post(*a.svc, "/simulate", {{"state", state}, {"action", suggestion.at("action")}, {"seed", seed}}, &status));
    ASSERT_EQ(status, 200) << sim.dump();
    EXPECT_TRUE(sim.at("causal_ok").get<bool>());
    expect_same_state(sim.at("next_state"), suggestion.at("predicted_next_state"));
    EXPECT_EQ(sim.at("is_counterfactual"), suggestion.at("predicted_is_counterfactual"));
  }
  EXPECT_GT(with_action, 50);
}

TEST(Service, RequestsAreStateless) {
  auto& a = adult();
  const json request = {{"state", a.typical_state()}, {"seed", 5}};
  const std::string first = post(*a.svc, "/suggest", request);
  post(*a.svc, "/simulate", {{"state", a.typical_state()}, {"action", {{"feature", "hours-per-week"}, {"delta", 5}}}});
  post(*a.svc, "/suggest", {{"state", a.typical_state()}, {"seed", 6}});
  EXPECT_EQ(post(*a.svc, "/suggest", request), first);
}

TEST(Service, StepBudgetIsReported) {
  auto& a = adult();
  const json j = json::parse(post(*a.svc, "/suggest", {{"state", a.typical_state()}, {"steps_taken", 195}}));
  EXPECT_EQ(j.at("step_budget_remaining"), a.env->step_cap() - 195);
  const json done = json::parse(post(*a.svc, "/suggest", {{"state", a.typical_state()}, {"steps_taken", 500}}));
  EXPECT_EQ(done.at("step_budget_remaining"), 0);
  EXPECT_TRUE(done.at("action").is_null());
}

TEST(Service, ForeignFingerprintIs409) {
  auto& a = adult();
  int status = 0;
  const json j = json::parse(
      post(*a.svc, "/suggest", {{"state", a.typical_state()}, {"schema_fingerprint", "0000000000000000"}}, &status));
  EXPECT_EQ(status, 409);
  EXPECT_EQ(j.at("code"), "FingerprintMismatch");
  post(*a.svc, "/suggest", {{"state", a.typical_state()}, {"schema_fingerprint", a.doc.fingerprint}}, &status);
  EXPECT_EQ(status, 200);
}

TEST(Service, PolicyForAnotherSchemaIsRefused) {
  auto toy = std::make_shared<mdp::ToyMdp>(mdp::ToyFixture::kExample2);
  auto other = std::make_shared<mdp::ToyMdp>(mdp::ToyFixture::kExample1);
  auto policy = std::make_shared<solvers::TabularPolicyAdapter>(other, solvers::value_iteration(*other, 0.99));
  try {
    RecourseService svc(toy, policy, toy_schema_text(*toy));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFingerprintMismatch);
  }
}

TEST(HttpServer, RoundTripOverTheWire) {
  ToyService t;
  HttpServer server(t.svc);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread runner([&] { server.run(); });
  httplib::Client client("127.0.0.1", port);
  auto schema = client.Get("/schema");
  ASSERT_TRUE(schema);
  EXPECT_EQ(schema->status, 200);
  EXPECT_EQ(schema->body, toy_schema_text(*t.toy));
  auto suggest = client.Post("/suggest", json{{"state", {{"a", "1"}, {"b", "2"}}}}.dump(), "application/json");
  ASSERT_TRUE(suggest);
  EXPECT_EQ(suggest->status, 200);
  EXPECT_FALSE(json::parse(suggest->body).at("action").is_null());
  auto bad = client.Post("/simulate", json{{"state", {{"a", "1"}, {"b", "7"}}}}.dump(), "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body).at("field"), "b");
  auto missing = client.Get("/nowhere");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  runner.join();
}

TEST(RunConfig, UnknownKeysAreConfigErrors) {
  try {
    run_config_from_json({{"toy", "example1"}, {"ppo_steps", 5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
    EXPECT_EQ(e.field(), "ppo_steps");
  }
  try {
    run_config_from_json({{"toy", "example7"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
  try {
    run_config_from_json({{"explain", {{"spilt", "test"}}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "spilt");
  }
}

TEST(RunConfig, RelativePathsResolveAgainstTheConfigDirectory) {
  const RunConfig cfg = run_config_from_json({{"schema", "s.json"}, {"dataset", "/abs/d.csv"}, {"out", "o"}}, "/base");
  EXPECT_EQ(cfg.schema_path, "/base/s.json");
  EXPECT_EQ(cfg.dataset_path, "/abs/d.csv");
  EXPECT_EQ(cfg.out_dir, "/base/o");
}

TEST(RunConfig, TopLevelSeedReseedsTheSubRuns) {
  const RunConfig a = run_config_from_json({{"seed", 1}});
  const RunConfig b = run_config_from_json({{"seed", 2}});
  EXPECT_NE(a.ppo.seed, b.ppo.seed);
  EXPECT_NE(a.classifier.seed, b.classifier.seed);
  EXPECT_NE(a.ppo.seed, a.classifier.seed);
}

TEST(RunConfig, ShippedConfigsLoad) {
  const RunConfig syn = load_run_config(ts::source_path("configs/synthetic.json"));
  EXPECT_TRUE(syn.synthetic.has_value());
  const RunConfig toy = load_run_config(ts::source_path("configs/example1.json"));
  EXPECT_EQ(toy.toy, mdp::ToyFixture::kExample1);
  EXPECT_EQ(toy.ppo.total_env_steps, 50000u);
}

TEST(Pipeline, MissingArtifactsAreReported) {
  RunConfig cfg;
  cfg.synthetic = data::SyntheticOptions{.rows = 200};
  cfg.out_dir = temp_dir("missing");
  const Workspace ws = load_workspace(cfg);
  try {
    load_classifier_for(cfg, ws);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kArtifactMismatch);
  }
  try {
    make_service(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kArtifactMismatch);
  }
  RunConfig toy;
  toy.toy = mdp::ToyFixture::kExample1;
  try {
    load_workspace(toy);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
}

TEST(Pipeline, SyntheticEndToEndIsReproducible) {
  RunConfig cfg = run_config_from_json({{"synthetic", {{"rows", 600}}},
                                        {"classifier", {{"epochs", 60}}},
                                        {"ppo", {{"total_env_steps", 6000}, {"rollout_batch_size", 1000}}},
                                        {"seed", 3}});
  cfg.out_dir = temp_dir("pipeline");
  std::ostringstream log;
  ASSERT_EQ(run_train_classifier(cfg, log), 0);
  ASSERT_EQ(run_train_policy(cfg, log), 0);
  ASSERT_EQ(run_explain(cfg, log), 0);
  const fs::path out(cfg.out_dir);
  for (const char* f : {"classifier.json", "classifier_report.json", "policy.json", "paths_policy_test.jsonl",
                        "report_policy_test.json", "timing_policy_test.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string report = read_text_file((out / "report_policy_test.json").string());
  const json r = json::parse(report);
  EXPECT_EQ(r.at("method"), "policy");
  EXPECT_GT(r.at("n_datapoints").get<int>(), 0);
  EXPECT_FALSE(r.contains("mean_time"));
  EXPECT_NE(log.str().find("Validity"), std::string::npos);

  ASSERT_EQ(run_explain(cfg, log), 0);
  EXPECT_EQ(read_text_file((out / "report_policy_test.json").string()), report);

  ASSERT_EQ(run_evaluate(cfg, log), 0);
  EXPECT_EQ(json::parse(read_text_file((out / "evaluation_test.json").string())).size(), 3u);

  cfg.report_path = (out / "report_policy_test.json").string();
  const auto svc = make_service(cfg);
  const HttpResponse metrics = svc->handle("GET", "/metrics", "");
  EXPECT_EQ(metrics.status, 200);
  EXPECT_EQ(body_of(metrics).at("report"), r);
  EXPECT_EQ(svc->handle("GET", "/schema", "").body, data::synthetic_schema_text());
}

TEST(Pipeline, ToyVerifyWritesItsSummary) {
  RunConfig cfg;
  cfg.toy = mdp::ToyFixture::kExample1;
  cfg.ppo.total_env_steps = 4000;
  cfg.out_dir = temp_dir("toy");
  std::ostringstream log;
  const int code = run_toy_verify(cfg, log);
  const json summary = json::parse(read_text_file((fs::path(cfg.out_dir) / "toy_verify.json").string()));
  EXPECT_EQ(summary.at("ok").get<bool>(), code == 0);
  EXPECT_EQ(summary.at("value_iteration_steps_from_origin"), 5);
  EXPECT_NEAR(summary.at("value_iteration_mean").get<double>(), 6.8381, 5e-5);
  EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "policy.json"));
}

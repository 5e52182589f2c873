#include <gtest/gtest.h>

#include <sstream>

#include "recourse/common/error.hpp"
#include "recourse/data/synthetic.hpp"
#include "recourse/explain/metrics.hpp"
#include "recourse/explain/rollout.hpp"
#include "recourse/mdp/cfe_mdp.hpp"
#include "recourse/mdp/toy.hpp"
#include "recourse/solvers/policy.hpp"
#include "test_support.hpp"

using namespace recourse;
using namespace recourse::explain;
namespace ts = recourse::test_support;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kPreconditionViolated;
}

// Synthetic schema with train MADs income = 10, savings = 5.
struct Fixture {
  data::SchemaDocument doc = data::parse_schema_document(data::synthetic_schema_text());
  data::Dataset ds = [this] {
    data::Dataset d = data::make_dataset(doc.schema, {{10, 0}, {20, 5}, {30, 10}, {40, 15}, {50, 20}}, {0, 0, 0, 0, 1});
    d.split.train = {0, 1, 2, 3, 4};
    d.split.val.clear();
    d.split.test.clear();
    return d;
  }();
  std::shared_ptr<mdp::CfeMdp> env = mdp::build_mdp(
      ds, std::make_shared<ts::LinearClassifier>(std::vector<double>{50.0, 0.0}, 0.0),
      causal::CausalModel::from_json(doc.causal_section(), doc.schema), {}, doc.fingerprint);
  MetricContext ctx = metric_context(*env);

  State scaled(double income, double savings) const { return env->scaler().scale(std::vector<double>{income, savings}); }

  // A valid one-step path from `from` to `to` (original units).
  CfePath path(std::vector<double> from, std::vector<double> to, bool valid = true) const {
    CfePath p;
    p.start = scaled(from[0], from[1]);
    p.final_state = scaled(to[0], to[1]);
    const std::size_t j = from[0] != to[0] ? 0 : 1;
    p.steps.push_back({p.start, Action{j, p.final_state[j] - p.start[j]}, p.final_state, 0.0});
    p.valid = valid;
    return p;
  }
};

}  // namespace

TEST(Metrics, ProximityAndSparsityByHand) {
  const Fixture f;
  const CfePath p = f.path({20, 10}, {40, 10});
  EXPECT_NEAR(prox_num(p, f.doc.schema, f.env->scaler(), f.env->stats()), 2.0, 1e-12);
  EXPECT_EQ(sparsity(p), 1.0);
  EXPECT_EQ(prox_cat(p, f.doc.schema), 0.0);

  CfePath both = p;
  both.final_state = f.scaled(40, 20);
  EXPECT_NEAR(prox_num(both, f.doc.schema, f.env->scaler(), f.env->stats()), 2.0 + 2.0, 1e-12);
  EXPECT_EQ(sparsity(both), 2.0);
}

TEST(Metrics, CategoricalProximityIsAFraction) {
  const auto doc = data::load_schema_document(ts::source_path("data/adult.schema.json"));
  CfePath p;
  p.start = State(doc.schema.size(), 0.0);
  p.final_state = p.start;
  p.final_state[doc.schema.require_index("education")] = 3.0;
  p.valid = true;
  EXPECT_DOUBLE_EQ(prox_cat(p, doc.schema), 1.0 / 8.0);
  EXPECT_EQ(sparsity(p), 1.0);
}

TEST(Metrics, PerPathMetricsNeedValidPaths) {
  const Fixture f;
  const CfePath p = f.path({20, 10}, {40, 10}, false);
  EXPECT_EQ(code_of([&] { sparsity(p); }), ErrorCode::kInvalidPath);
  EXPECT_EQ(code_of([&] { prox_cat(p, f.doc.schema); }), ErrorCode::kInvalidPath);
}

TEST(Evaluate, ThreeOfFourValidGives75) {
  const Fixture f;
  std::vector<CfePath> paths{f.path({20, 10}, {40, 10}), f.path({20, 10}, {20, 30}), f.path({10, 0}, {30, 0}),
                             f.path({20, 10}, {25, 10}, false)};
  const EvalReport r = evaluate(paths, f.ctx, "policy");
  EXPECT_EQ(r.n_datapoints, 4u);
  EXPECT_EQ(r.n_valid, 3u);
  EXPECT_DOUBLE_EQ(r.validity, 75.0);
  EXPECT_DOUBLE_EQ(r.causality, 100.0);
  EXPECT_NEAR(r.prox_num, (2.0 + 4.0 + 2.0) / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.sparsity, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_steps, 1.0);
  EXPECT_EQ(r.method, "policy");
}

TEST(Evaluate, CausalityCountsEveryPath) {
  const Fixture f;
  // Income is non-decreasing, so the second path breaks causality.
  std::vector<CfePath> paths{f.path({20, 10}, {40, 10}), f.path({40, 10}, {20, 10})};
  const EvalReport r = evaluate(paths, f.ctx);
  EXPECT_DOUBLE_EQ(r.causality, 50.0);
  EXPECT_DOUBLE_EQ(r.validity, 100.0);
}

TEST(Evaluate, NoValidPathsLeavesAveragesUndefined) {
  const Fixture f;
  const EvalReport r = evaluate({f.path({20, 10}, {25, 10}, false)}, f.ctx);
  EXPECT_EQ(r.validity, 0.0);
  EXPECT_TRUE(std::isnan(r.prox_num));
  EXPECT_TRUE(std::isnan(r.sparsity));
  const json j = report_to_json(r);
  EXPECT_TRUE(j.at("prox_num").is_null());
  EXPECT_EQ(j.at("validity").get<double>(), 0.0);
  EXPECT_NE(report_table({r}).find("N/A"), std::string::npos);
}

TEST(Evaluate, EmptyInputRejected) {
  const Fixture f;
  EXPECT_EQ(code_of([&] { evaluate({}, f.ctx); }), ErrorCode::kEmptyInput);
  MetricContext no_stats = f.ctx;
  no_stats.stats.reset();
  EXPECT_EQ(code_of([&] { evaluate({f.path({20, 10}, {40, 10})}, no_stats); }), ErrorCode::kPreconditionViolated);
}

TEST(Rollout, StartAlreadyPositiveIsAZeroStepValidPath) {
  const Fixture f;
  const solvers::RandomBaseline random;
  Rng rng(0);
  const CfePath p = rollout(random, *f.env, f.scaled(80, 80), 10, rng);
  EXPECT_TRUE(p.valid);
  EXPECT_TRUE(p.steps.empty());
  EXPECT_EQ(p.final_state, p.start);
  EXPECT_EQ(sparsity(p), 0.0);
}

TEST(Rollout, CapExhaustedIsInvalid) {
  const mdp::ToyMdp toy(mdp::ToyFixture::kExample1);
  const solvers::GreedyBaseline greedy;
  Rng rng(0);
  const CfePath p = rollout(greedy, toy, State{0, 0}, 7, rng);
  EXPECT_FALSE(p.valid);
  EXPECT_EQ(p.steps.size(), 7u);
  // Consecutive steps chain.
  for (std::size_t t = 1; t < p.steps.size(); ++t) EXPECT_EQ(p.steps[t].before, p.steps[t - 1].after);
  EXPECT_EQ(p.steps.back().after, p.final_state);
}

TEST(ExplainBatch, EmptyStartsGiveAnEmptyReport) {
  const Fixture f;
  const solvers::GreedyBaseline greedy;
  const BatchResult out = explain_batch(greedy, *f.env, f.ctx, {}, 10, 0);
  EXPECT_TRUE(out.paths.empty());
  EXPECT_EQ(out.report.n_datapoints, 0u);
  EXPECT_EQ(out.report.method, "greedy");
  EXPECT_TRUE(report_to_json(out.report).at("validity").is_null());
}

TEST(ExplainBatch, ThreadCountDoesNotChangeResults) {
  const Fixture f;
  const solvers::RandomBaseline random;
  ts::Gen gen(4);
  std::vector<State> starts;
  for (int i = 0; i < 40; ++i) starts.push_back(f.scaled(gen.uniform(0, 45), gen.uniform(0, 45)));
  const auto one = explain_batch(random, *f.env, f.ctx, starts, 30, 9, 1);
  const auto three = explain_batch(random, *f.env, f.ctx, starts, 30, 9, 3);
  ASSERT_EQ(one.paths.size(), three.paths.size());
  for (std::size_t i = 0; i < one.paths.size(); ++i) {
    EXPECT_EQ(one.paths[i].final_state, three.paths[i].final_state);
    EXPECT_EQ(one.paths[i].steps.size(), three.paths[i].steps.size());
    EXPECT_EQ(one.paths[i].valid, three.paths[i].valid);
  }
  EXPECT_EQ(one.report.validity, three.report.validity);
  EXPECT_EQ(one.report.prox_num, three.report.prox_num);
}

TEST(Report, TableHasTheExpectedColumns) {
  EvalReport r;
  r.method = "policy";
  r.n_datapoints = 10;
  r.n_valid = 10;
  r.validity = 100.0;
  r.prox_num = 1.25;
  r.prox_cat = 0.0;
  r.sparsity = 1.5;
  r.manifold_dist = 0.02;
  r.causality = 100.0;
  r.mean_time = 0.000125;
  const std::string table = report_table({r});
  for (const char* column : {"Approach", "#DataPts.", "Validity", "Prox-Num", "Prox-Cat", "Sparsity",
                             "Manifold dist.", "Causality", "Time (s)"}) {
    EXPECT_NE(table.find(column), std::string::npos) << column;
  }
  EXPECT_NE(table.find("0.000125"), std::string::npos);
  EXPECT_NE(table.find("1.250"), std::string::npos);
}

TEST(Report, PathsAsJsonLines) {
  const Fixture f;
  std::vector<CfePath> paths{f.path({20, 10}, {40, 10}), f.path({20, 10}, {25, 10}, false)};
  std::ostringstream out;
  write_paths_jsonl(out, paths, f.doc.schema);
  std::istringstream in(out.str());
  std::string line;
  std::vector<json> rows;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].at("valid"), true);
  EXPECT_EQ(rows[0].at("n_steps"), 1);
  EXPECT_NEAR(rows[0].at("final").at("income").get<double>(), 40.0, 1e-9);
  EXPECT_EQ(rows[0].at("steps")[0].at("action").at("feature"), "income");
  EXPECT_NEAR(rows[0].at("steps")[0].at("action").at("delta").get<double>(), 20.0, 1e-9);
  EXPECT_EQ(rows[1].at("valid"), false);
}

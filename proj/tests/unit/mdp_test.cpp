#include <gtest/gtest.h>

#include <map>

#include "recourse/causal/causal_model.hpp"
#include "recourse/common/error.hpp"
#include "recourse/data/synthetic.hpp"
#include "recourse/mdp/cfe_mdp.hpp"
#include "recourse/mdp/codec.hpp"
#include "recourse/mdp/manifold.hpp"
#include "recourse/mdp/toy.hpp"
#include "test_support.hpp"

using namespace recourse;
using namespace recourse::mdp;
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

struct Synthetic {
  data::SchemaDocument doc = data::parse_schema_document(data::synthetic_schema_text());
  causal::CausalModel cm = causal::CausalModel::from_json(doc.causal_section(), doc.schema);

  // One-point manifold at `ref`; stats from a two-row dataset.
  std::shared_ptr<CfeMdp> with(std::shared_ptr<const model::Classifier> clf, const RewardConfig& cfg,
                               State ref = {0.0, 0.0}) const {
    auto manifold = std::make_shared<ManifoldIndex>(std::vector<State>{std::move(ref)}, categorical_mask(doc.schema));
    data::Dataset ds = data::make_dataset(doc.schema, {{10, 20}, {60, 70}}, {0, 1});
    ds.split.train = {0, 1};
    return std::make_shared<CfeMdp>(doc.schema, cm, std::move(clf), std::move(manifold),
                                    data::ScalingTransform(doc.schema), data::compute_train_stats(ds), cfg,
                                    doc.fingerprint);
  }
};

}  // namespace

TEST(ToyMdp, SizesAndActionSets) {
  const ToyMdp e1(ToyFixture::kExample1);
  EXPECT_EQ(e1.num_states(), 10u);
  EXPECT_EQ(e1.num_actions(), 4u);
  const ToyMdp e2(ToyFixture::kExample2);
  EXPECT_EQ(e2.num_states(), 19u);
  EXPECT_EQ(e2.num_actions(), 4u);  // r is immutable
  EXPECT_EQ(ToyMdp(ToyFixture::kAppendixC1).num_states(), 10u);
  for (auto f : all_toy_fixtures()) {
    EXPECT_EQ(parse_toy_fixture(to_string(f)), f);
  }
  EXPECT_FALSE(parse_toy_fixture("example9").has_value());
}

TEST(ToyMdp, Example1Transitions) {
  const ToyMdp toy(ToyFixture::kExample1);
  Rng rng(0);
  const auto r = toy.step(State{0, 1}, {1, 1.0}, rng);
  EXPECT_EQ(r.next, (State{0, 2}));
  EXPECT_DOUBLE_EQ(r.reward, -1.0);
  EXPECT_FALSE(r.terminal);
  // Out-of-domain moves leave the state unchanged but still cost.
  const auto edge = toy.step(State{0, 0}, {0, -1.0}, rng);
  EXPECT_EQ(edge.next, (State{0, 0}));
  EXPECT_DOUBLE_EQ(edge.reward, -1.0);
  // Any action in the green state ends the episode.
  const auto done = toy.step(State{2, 2}, {0, -1.0}, rng);
  EXPECT_TRUE(done.terminal);
  EXPECT_DOUBLE_EQ(done.reward, 9.0);
  EXPECT_EQ(done.next, (State{2, 2}));
}

TEST(ToyMdp, Example2EducationMayRaiseAge) {
  const ToyMdp toy(ToyFixture::kExample2);
  const auto dist = toy.transition_distribution(State{0, 0, 1}, {1, 1.0});
  std::map<State, double> p;
  for (const auto& w : dist) p[w.state] += w.probability;
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ((p[State{0, 1, 1}]), 0.5);
  EXPECT_DOUBLE_EQ((p[State{1, 1, 1}]), 0.5);
  // Age cannot go down, race cannot change.
  EXPECT_FALSE(toy.is_legal(State{1, 0, 0}, {0, -1.0}));
  EXPECT_FALSE(toy.is_legal(State{1, 0, 0}, {2, 1.0}));
}

TEST(ToyMdp, AppendixC2RewardIsConstantOffTheGoal) {
  const ToyMdp toy(ToyFixture::kAppendixC2);
  for (std::size_t s = 0; s < toy.grid_states().size(); ++s) {
    if (toy.is_green(toy.state_at(s))) continue;
    for (std::size_t a = 0; a < toy.num_actions(); ++a) {
      for (const auto& o : toy.outcomes(s, a)) EXPECT_DOUBLE_EQ(o.reward, -1.0);
    }
  }
}

TEST(ToyMdp, AppendixC3PenalisesUnrealisticStates) {
  const ToyMdp toy(ToyFixture::kAppendixC3);
  EXPECT_DOUBLE_EQ(toy.entry_reward(State{0, 2, 0}), -5.0);
  EXPECT_DOUBLE_EQ(toy.entry_reward(State{2, 0, 1}), -5.0);
  EXPECT_DOUBLE_EQ(toy.entry_reward(State{1, 1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(toy.manifold_distance(State{0, 2, 1}), 1.0);
  // b + 1 from (0, 1, 0) lands in the unrealistic (0, 2, 0) half the time.
  const auto outcomes = toy.outcomes(toy.index_of(State{0, 1, 0}), 2);
  ASSERT_EQ(toy.discrete_actions()[2], (Action{1, 1.0}));
  ASSERT_EQ(outcomes.size(), 2u);
  for (const auto& o : outcomes) {
    EXPECT_DOUBLE_EQ(o.probability, 0.5);
    EXPECT_DOUBLE_EQ(o.reward, (toy.state_at(o.next) == State{0, 2, 0}) ? -6.0 : -1.0);
  }
}

TEST(ToyMdp, AppendixC4CostsDependOnTheFeature) {
  const ToyMdp toy(ToyFixture::kAppendixC4);
  EXPECT_DOUBLE_EQ(toy.action_cost({0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(toy.action_cost({1, 1.0}), 2.0);
}

TEST(ToyMdp, KernelRowsSumToOne) {
  for (auto f : all_toy_fixtures()) {
    const ToyMdp toy(f);
    for (std::size_t s = 0; s < toy.num_states(); ++s) {
      for (std::size_t a = 0; a < toy.num_actions(); ++a) {
        double total = 0.0;
        for (const auto& o : toy.outcomes(s, a)) {
          EXPECT_LT(o.next, toy.num_states());
          total += o.probability;
        }
        EXPECT_NEAR(total, 1.0, 1e-12) << to_string(f);
      }
    }
  }
}

TEST(ToyMdp, IndexRoundTrip) {
  const ToyMdp toy(ToyFixture::kAppendixC2);
  for (std::size_t i = 0; i < toy.grid_states().size(); ++i) EXPECT_EQ(toy.index_of(toy.state_at(i)), i);
  EXPECT_EQ(code_of([&] { toy.index_of(State{5, 0, 0}); }), ErrorCode::kOutOfDomainValue);
}

TEST(CfeReward, ReachingTheDesiredLabelPays100) {
  const Synthetic syn;
  auto env = syn.with(std::make_shared<ts::ConstantClassifier>(2, std::vector<double>{0.2, 0.8}), {});
  Rng rng(0);
  const auto r = env->step(State{0, 0}, {0, 0.1}, rng);
  EXPECT_TRUE(r.terminal);
  EXPECT_DOUBLE_EQ(r.reward, 100.0);
}

TEST(CfeReward, PartialRewardIsTheDesiredProbability) {
  const Synthetic syn;
  auto env = syn.with(std::make_shared<ts::ConstantClassifier>(2, std::vector<double>{0.7, 0.3}), {});
  Rng rng(0);
  const auto r = env->step(State{0, 0}, {0, 0.1}, rng);
  EXPECT_FALSE(r.terminal);
  EXPECT_DOUBLE_EQ(r.reward, 0.3);
}

TEST(CfeReward, ManifoldPenaltyScalesWithLambda) {
  const Synthetic syn;
  RewardConfig cfg;
  cfg.lambda = 1.0;
  // Landing at (0.1, 0) with the only reference point at (-0.4, 0.5): l1 distance 1.
  auto env = syn.with(std::make_shared<ts::ConstantClassifier>(2, std::vector<double>{0.7, 0.3}), cfg, {-0.4, 0.5});
  Rng rng(0);
  const auto r = env->step(State{0, 0}, {0, 0.1}, rng);
  EXPECT_NEAR(r.reward, -0.7, 1e-12);
}

TEST(CfeReward, PercentileDistanceUsesTheTrainCdf) {
  const Synthetic syn;
  RewardConfig cfg;
  cfg.dist_f = DistF::kPercentile;
  auto env = syn.with(std::make_shared<ts::ConstantClassifier>(2, std::vector<double>{0.7, 0.3}), cfg);
  // income 0 -> 50 passes one of the two train incomes (10): CDF 0 -> 0.5.
  EXPECT_DOUBLE_EQ(env->action_cost(State{-1.0, 0.0}, State{0.0, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(env->reward(State{-1.0, 0.0}, State{0.0, 0.0}), 0.3 - 0.5);
}

TEST(CfeReward, BoundedForRandomTransitions) {
  const Synthetic syn;
  RewardConfig cfg;
  cfg.lambda = 2.0;
  auto env = syn.with(std::make_shared<ts::LinearClassifier>(std::vector<double>{3.0, 3.0}, -1.0), cfg);
  ts::Gen gen(77);
  for (int i = 0; i < 2000; ++i) {
    const State s{gen.uniform(-1, 1), gen.uniform(-1, 1)};
    const Action& a = env->discrete_actions()[gen.index(env->discrete_actions().size())];
    const auto r = env->step(s, a, gen.rng());
    if (r.terminal) {
      EXPECT_LE(r.reward, 100.0);
      EXPECT_GE(r.reward, 100.0 - 2.0 * 4.0);
    } else {
      EXPECT_LE(r.reward, 0.5);
      EXPECT_GE(r.reward, -2.0 * 4.0);
    }
  }
}

TEST(CfeMdp, ConstructionErrors) {
  const Synthetic syn;
  EXPECT_EQ(code_of([&] { syn.with(std::make_shared<ts::ConstantClassifier>(3, std::vector<double>{1, 0}), {}); }),
            ErrorCode::kSchemaMismatch);
  RewardConfig bad;
  bad.lambda = -1.0;
  EXPECT_EQ(code_of([&] { syn.with(std::make_shared<ts::ConstantClassifier>(2, std::vector<double>{1, 0}), bad); }),
            ErrorCode::kConfigError);

  EXPECT_EQ(code_of([&] {
              CfeMdp(syn.doc.schema, syn.cm, std::make_shared<ts::ConstantClassifier>(2, std::vector<double>{1, 0}),
                     std::make_shared<ManifoldIndex>(std::vector<State>{{0.0}}, std::vector<bool>{false}),
                     data::ScalingTransform(syn.doc.schema), {}, {}, "");
            }),
            ErrorCode::kSchemaMismatch);

  data::FeatureSpec frozen;
  frozen.name = "x";
  frozen.mutability = data::Mutability::kImmutable;
  const data::FeatureSchema schema({frozen}, "y", 1);
  EXPECT_EQ(code_of([&] {
              CfeMdp(schema, causal::CausalModel(schema), std::make_shared<ts::ConstantClassifier>(1, std::vector<double>{1, 0}),
                     std::make_shared<ManifoldIndex>(std::vector<State>{{0.0}}, std::vector<bool>{false}),
                     data::ScalingTransform(schema), {}, {}, "");
            }),
            ErrorCode::kNoActionableFeatures);
}

TEST(CfeMdp, BuildRejectsForeignClassifierFingerprint) {
  const Synthetic syn;
  const data::Dataset ds = data::make_synthetic_dataset({.rows = 100});
  auto inner = std::make_shared<model::MlpClassifier>(
      model::InputEncoding(ds.schema), model::Mlp({2, 2}, {model::Activation::kIdentity}), "other");
  EXPECT_EQ(code_of([&] { build_mdp(ds, inner, syn.cm, {}, syn.doc.fingerprint); }), ErrorCode::kSchemaMismatch);
}

TEST(Environment, ImmutableFeaturesAreFixedPoints) {
  const auto doc = data::load_schema_document(ts::source_path("data/adult.schema.json"));
  const auto cm = causal::CausalModel::from_json(doc.causal_section(), doc.schema);
  const auto& schema = doc.schema;
  auto manifold = std::make_shared<ManifoldIndex>(std::vector<State>{State(schema.size(), 0.0)}, categorical_mask(schema));
  const CfeMdp env(schema, cm, std::make_shared<ts::ConstantClassifier>(schema.size(), std::vector<double>{0.9, 0.1}),
                   manifold, data::ScalingTransform(schema), {}, {}, doc.fingerprint);
  ts::Gen gen(5);
  for (int i = 0; i < 500; ++i) {
    State s(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& f = schema.feature(j);
      s[j] = f.is_numerical() ? gen.uniform(-1, 1) : static_cast<double>(gen.index(f.categories.size()));
    }
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (!cm.is_immutable(j)) continue;
      const Action a{j, schema.feature(j).is_categorical() ? 1.0 : 0.1};
      EXPECT_EQ(env.transition(s, a, gen.rng()), s);
    }
    for (const auto& a : env.discrete_actions()) {
      const State next = env.transition(s, a, gen.rng());
      for (std::size_t j = 0; j < schema.size(); ++j) {
        if (cm.is_immutable(j)) EXPECT_EQ(next[j], s[j]);
      }
    }
  }
  // No action slot exists for an immutable feature.
  for (const auto& f : env.action_space().features()) EXPECT_FALSE(cm.is_immutable(f.feature));
}

TEST(Environment, ValidateState) {
  const ToyMdp toy(ToyFixture::kExample1);
  EXPECT_EQ(code_of([&] { toy.validate_state(State{0, 0, 0}); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { toy.validate_state(State{0, 3}); }), ErrorCode::kOutOfDomainValue);
  EXPECT_NO_THROW(toy.validate_state(State{2, 1}));
}

TEST(Manifold, SinglePointByHand) {
  const ManifoldIndex index({{0.0, 0.0}}, {false, false});
  EXPECT_DOUBLE_EQ(index.distance(State{0.5, -0.5}), 1.0);
  EXPECT_EQ(index.nearest(State{0.5, -0.5}), 0u);
}

TEST(Manifold, CategoricalMismatchCountsOne) {
  const ManifoldIndex index({{0.0, 2.0}}, {false, true});
  EXPECT_DOUBLE_EQ(index.distance(State{0.25, 1.0}), 1.25);
  EXPECT_DOUBLE_EQ(index.distance(State{0.25, 2.0}), 0.25);
}

TEST(Manifold, EmptyReferenceRejected) {
  EXPECT_EQ(code_of([] { ManifoldIndex({}, {false}); }), ErrorCode::kEmptyReference);
}

TEST(Manifold, MatchesBruteForceOnRandomQueries) {
  ts::Gen gen(31);
  const std::vector<bool> categorical{false, true, false, false, true};
  auto draw = [&] {
    State s(categorical.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] = categorical[j] ? static_cast<double>(gen.index(4)) : gen.uniform(-1, 1);
    }
    return s;
  };
  std::vector<State> reference;
  for (int i = 0; i < 700; ++i) reference.push_back(draw());
  reference.push_back(reference[10]);  // duplicate row: lowest index wins
  const ManifoldIndex index(reference, categorical, 8);
  for (int q = 0; q < 1000; ++q) {
    const State query = q == 0 ? reference[10] : draw();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_row = 0;
    for (std::size_t r = 0; r < reference.size(); ++r) {
      const double d = state_distance(query, reference[r], categorical);
      if (d < best) {
        best = d;
        best_row = r;
      }
    }
    EXPECT_EQ(index.distance(query), best);
    EXPECT_EQ(index.nearest(query), best_row);
  }
}

TEST(Codec, StateRoundTripOnAdult) {
  const auto doc = data::load_schema_document(ts::source_path("data/adult.schema.json"));
  const StateCodec codec(doc.schema);
  ts::Gen gen(12);
  for (int i = 0; i < 200; ++i) {
    State s(doc.schema.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto& f = doc.schema.feature(j);
      s[j] = f.is_numerical() ? gen.uniform(-1, 1) : static_cast<double>(gen.index(f.categories.size()));
    }
    const State back = codec.state_from_json(codec.state_to_json(s));
    for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(back[j], s[j], 1e-12);
  }
  const json j = codec.state_to_json(State(doc.schema.size(), 0.0));
  EXPECT_EQ(j.at("education"), "Preschool");
  EXPECT_DOUBLE_EQ(j.at("age").get<double>(), 53.5);
}

TEST(Codec, ErrorsNameTheField) {
  const auto doc = data::parse_schema_document(data::synthetic_schema_text());
  const StateCodec codec(doc.schema);
  try {
    codec.state_from_json({{"income", 10}, {"savings", 10}, {"height", 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownColumn);
    EXPECT_EQ(e.field(), "height");
  }
  try {
    codec.state_from_json({{"income", 10}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingValue);
    EXPECT_EQ(e.field(), "savings");
  }
  try {
    codec.state_from_json({{"income", 101}, {"savings", 10}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfDomainValue);
    EXPECT_EQ(e.field(), "income");
  }
}

TEST(Codec, ActionDeltasAreOriginalUnits) {
  const auto doc = data::parse_schema_document(data::synthetic_schema_text());
  const StateCodec codec(doc.schema);
  const Action a = codec.action_from_json({{"feature", "savings"}, {"delta", 10}});
  EXPECT_EQ(a.feature, 1u);
  EXPECT_DOUBLE_EQ(a.delta, 0.2);
  EXPECT_DOUBLE_EQ(codec.action_to_json(a).at("delta").get<double>(), 10.0);
}

TEST(RewardConfig, JsonRoundTripAndUnknownDistF) {
  RewardConfig cfg;
  cfg.lambda = 3.5;
  cfg.dist_f = DistF::kPercentile;
  const RewardConfig back = reward_config_from_json(reward_config_to_json(cfg));
  EXPECT_EQ(back.lambda, 3.5);
  EXPECT_EQ(back.dist_f, DistF::kPercentile);
  EXPECT_EQ(code_of([] { reward_config_from_json({{"dist_f", "euclid"}}); }), ErrorCode::kConfigError);
}

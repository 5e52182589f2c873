#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "recourse/common/error.hpp"
#include "recourse/common/serialization.hpp"
#include "recourse/data/scaling.hpp"
#include "recourse/data/synthetic.hpp"
#include "recourse/model/classifier.hpp"
#include "recourse/model/mlp.hpp"
#include "test_support.hpp"

using namespace recourse;
using namespace recourse::model;
namespace ts = recourse::test_support;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("recourse_model_test_" + name)).string();
}

// Trained once for the whole suite.
const MlpClassifier& synthetic_classifier() {
  static const MlpClassifier clf = [] {
    const data::Dataset ds = data::make_synthetic_dataset({});
    return train_classifier(ds, data::fit_scaler(ds), {}, "fp");
  }();
  return clf;
}

}  // namespace

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  ts::Gen gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(2 + gen.index(5));
    for (auto& z : logits) z = gen.uniform(-50, 50);
    std::vector<double> shifted = logits;
    for (auto& z : shifted) z += 700.0;
    softmax_in_place(logits);
    softmax_in_place(shifted);
    EXPECT_NEAR(std::accumulate(logits.begin(), logits.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      EXPECT_GE(logits[i], 0.0);
      EXPECT_NEAR(logits[i], shifted[i], 1e-12);
    }
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Mlp net({3, 4, 4, 2}, {Activation::kTanh, Activation::kTanh, Activation::kIdentity});
  Rng rng(5);
  net.initialize(rng);
  const std::vector<double> x{0.3, -0.7, 0.9};
  const std::vector<double> upstream{0.6, -1.3};
  auto loss = [&](const Mlp& m) {
    const auto y = m.forward(x);
    return upstream[0] * y[0] + upstream[1] * y[1];
  };
  Mlp::Cache cache;
  net.forward(x, cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(cache, upstream, grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < net.num_params(); ++i) {
    Mlp plus = net, minus = net;
    plus.params()[i] += h;
    minus.params()[i] -= h;
    EXPECT_NEAR(grad[i], (loss(plus) - loss(minus)) / (2 * h), 1e-6) << "param " << i;
  }
}

TEST(Mlp, ReluGradientAwayFromKinks) {
  Mlp net({2, 6, 1}, {Activation::kRelu, Activation::kIdentity});
  Rng rng(9);
  net.initialize(rng);
  const std::vector<double> x{0.4, -0.2};
  Mlp::Cache cache;
  net.forward(x, cache);
  std::vector<double> grad(net.num_params(), 0.0);
  const std::vector<double> upstream{1.0};
  net.backward(cache, upstream, grad);
  const double h = 1e-7;
  for (std::size_t i = 0; i < net.num_params(); ++i) {
    Mlp plus = net, minus = net;
    plus.params()[i] += h;
    minus.params()[i] -= h;
    EXPECT_NEAR(grad[i], (plus.forward(x)[0] - minus.forward(x)[0]) / (2 * h), 1e-5);
  }
}

TEST(Classifier, LogProbGradientMatchesFiniteDifferences) {
  InputEncoding encoding(std::vector<std::size_t>{0, 3});
  Mlp net({encoding.encoded_dim(), 5, 3, 2}, {Activation::kTanh, Activation::kTanh, Activation::kIdentity});
  Rng rng(1);
  net.initialize(rng);
  const MlpClassifier clf(encoding, net);
  const std::vector<double> state{0.2, 2.0};
  std::vector<double> grad(net.num_params(), 0.0);
  const double lp = clf.log_prob_and_grad(state, 1, grad);
  EXPECT_NEAR(lp, std::log(clf.predict_proba(state)[1]), 1e-12);
  const double h = 1e-6;
  for (std::size_t i = 0; i < net.num_params(); ++i) {
    MlpClassifier plus = clf, minus = clf;
    plus.mutable_network().params()[i] += h;
    minus.mutable_network().params()[i] -= h;
    const double fd = (std::log(plus.predict_proba(state)[1]) - std::log(minus.predict_proba(state)[1])) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-6);
  }
}

TEST(Classifier, InputWidthMismatchRejected) {
  InputEncoding encoding(std::vector<std::size_t>{0, 0});
  Mlp net({2, 2}, {Activation::kIdentity});
  const MlpClassifier clf(encoding, net);
  const std::vector<double> bad{1.0, 2.0, 3.0};
  try {
    clf.predict_proba(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Classifier, OneHotEncoding) {
  InputEncoding encoding(std::vector<std::size_t>{0, 3, 0});
  ASSERT_EQ(encoding.encoded_dim(), 5u);
  std::vector<double> out(5, -1.0);
  const std::vector<double> state{0.5, 2.0, -0.25};
  encoding.encode(state, out);
  EXPECT_EQ(out, (std::vector<double>{0.5, 0, 0, 1, -0.25}));
}

TEST(Classifier, SyntheticAccuracyAndConfidence) {
  const MlpClassifier& clf = synthetic_classifier();
  EXPECT_GE(clf.test_accuracy(), 0.95);
  const data::Dataset ds = data::make_synthetic_dataset({});
  const data::ScalingTransform scaler = data::fit_scaler(ds);
  // Deep inside each class, far from income + savings = 100.
  const auto deep_pos = scaler.scale(std::vector<double>{90, 90});
  const auto deep_neg = scaler.scale(std::vector<double>{10, 10});
  EXPECT_GT(clf.predict_proba(deep_pos)[1], 0.9);
  EXPECT_LT(clf.predict_proba(deep_neg)[1], 0.1);
  EXPECT_EQ(clf.predict(deep_pos), 1);
  EXPECT_EQ(clf.predict(deep_neg), 0);
}

TEST(Classifier, TrainingIsSeedDeterministic) {
  data::SyntheticOptions opts;
  opts.rows = 300;
  const data::Dataset ds = data::make_synthetic_dataset(opts);
  ClassifierTrainOptions train;
  train.epochs = 5;
  train.seed = 17;
  const auto a = train_classifier(ds, data::fit_scaler(ds), train);
  const auto b = train_classifier(ds, data::fit_scaler(ds), train);
  const auto pa = a.network().params();
  const auto pb = b.network().params();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], pb[i]);
}

TEST(Classifier, ZeroEpochsIsAPreconditionError) {
  const data::Dataset ds = data::make_synthetic_dataset({.rows = 50});
  ClassifierTrainOptions train;
  train.epochs = 0;
  try {
    train_classifier(ds, data::fit_scaler(ds), train);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolated);
  }
}

TEST(Classifier, LabelOnlyReturnsOneHot) {
  auto inner = std::make_shared<ts::LinearClassifier>(std::vector<double>{1.0}, 0.0);
  const LabelOnlyClassifier clf(inner);
  EXPECT_FALSE(clf.provides_probabilities());
  const std::vector<double> pos{0.3}, neg{-0.3};
  EXPECT_EQ(clf.predict_proba(pos), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(clf.predict_proba(neg), (std::vector<double>{1.0, 0.0}));
}

TEST(ClassifierArtifact, SaveLoadIsBitExact) {
  const MlpClassifier& clf = synthetic_classifier();
  const std::string path = temp_file("roundtrip.json");
  save_classifier(clf, path);
  const MlpClassifier back = load_classifier(path);
  EXPECT_EQ(back.schema_fingerprint(), "fp");
  EXPECT_EQ(back.test_accuracy(), clf.test_accuracy());
  ts::Gen gen(4);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> s{gen.uniform(-1, 1), gen.uniform(-1, 1)};
    EXPECT_EQ(back.predict_proba(s), clf.predict_proba(s));
  }
  std::filesystem::remove(path);
}

TEST(ClassifierArtifact, TruncatedFileIsCorrupt) {
  const std::string text = classifier_to_json(synthetic_classifier()).dump(1);
  const std::string path = temp_file("truncated.json");
  write_text_file(path, text.substr(0, text.size() / 2));
  try {
    load_classifier(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruptArtifact);
  }
  std::filesystem::remove(path);
}

TEST(ClassifierArtifact, NewerVersionRejected) {
  json node = classifier_to_json(synthetic_classifier());
  node["artifact_version"] = kClassifierArtifactVersion + 1;
  try {
    classifier_from_json(node);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
}

TEST(ClassifierArtifact, WrongParameterCountIsCorrupt) {
  json node = classifier_to_json(synthetic_classifier());
  node["category_counts"] = std::vector<std::size_t>{0, 0, 0};
  try {
    classifier_from_json(node);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruptArtifact);
  }
}

TEST(Serialization, HexFloatRoundTripProperty) {
  ts::Gen gen(8);
  for (int i = 0; i < 1000; ++i) {
    const double x = gen.normal() * std::pow(10.0, gen.uniform(-300, 300));
    EXPECT_EQ(from_hex_float(to_hex_float(x)), x);
  }
  EXPECT_EQ(from_hex_float(to_hex_float(-0.0)), 0.0);
}

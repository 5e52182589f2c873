#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "recourse/data/dataset.hpp"
#include "recourse/data/scaling.hpp"
#include "recourse/model/mlp.hpp"

namespace recourse::model {

// Black-box contract: the engine only ever calls predict_proba on a scaled
// state vector (categorical features as integer codes).
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<double> predict_proba(std::span<const double> state) const = 0;
  // False for labels-only models, whose predict_proba is a one-hot vector.
  virtual bool provides_probabilities() const { return true; }
  // Fingerprint of the schema the model was trained against ("" = unknown).
  virtual std::string schema_fingerprint() const { return {}; }

  int predict(std::span<const double> state) const;
};

// Exposes only the predicted label of another classifier.
class LabelOnlyClassifier final : public Classifier {
 public:
  explicit LabelOnlyClassifier(std::shared_ptr<const Classifier> inner) : inner_(std::move(inner)) {}

  std::size_t input_dim() const override { return inner_->input_dim(); }
  std::size_t num_classes() const override { return inner_->num_classes(); }
  std::vector<double> predict_proba(std::span<const double> state) const override;
  bool provides_probabilities() const override { return false; }
  std::string schema_fingerprint() const override { return inner_->schema_fingerprint(); }

 private:
  std::shared_ptr<const Classifier> inner_;
};

// One-hot expansion of categorical codes for the network's input layer.
class InputEncoding {
 public:
  InputEncoding() = default;
  explicit InputEncoding(const data::FeatureSchema& schema);
  explicit InputEncoding(std::vector<std::size_t> category_counts);

  std::size_t state_dim() const { return category_counts_.size(); }
  std::size_t encoded_dim() const { return encoded_dim_; }
  // 0 for numerical features.
  const std::vector<std::size_t>& category_counts() const { return category_counts_; }

  void encode(std::span<const double> state, std::span<double> out) const;

 private:
  std::vector<std::size_t> category_counts_;
  std::size_t encoded_dim_ = 0;
};

// input -> 5 -> 3 -> classes, ReLU hidden layers, softmax output.
class MlpClassifier final : public Classifier {
 public:
  MlpClassifier() = default;
  MlpClassifier(InputEncoding encoding, Mlp network, std::string schema_fingerprint = {});

  std::size_t input_dim() const override { return encoding_.state_dim(); }
  std::size_t num_classes() const override { return network_.output_dim(); }
  std::vector<double> predict_proba(std::span<const double> state) const override;
  std::string schema_fingerprint() const override { return fingerprint_; }

  // log p[label](state) and its gradient w.r.t. all network parameters
  // (accumulated into `grad`).
  double log_prob_and_grad(std::span<const double> state, int label, std::span<double> grad) const;

  const InputEncoding& encoding() const { return encoding_; }
  const Mlp& network() const { return network_; }
  Mlp& mutable_network() { return network_; }

  double test_accuracy() const { return test_accuracy_; }
  void set_test_accuracy(double accuracy) { test_accuracy_ = accuracy; }
  void set_schema_fingerprint(std::string fingerprint) { fingerprint_ = std::move(fingerprint); }

 private:
  InputEncoding encoding_;
  Mlp network_;
  std::string fingerprint_;
  double test_accuracy_ = 0.0;
};

void softmax_in_place(std::span<double> logits);

struct ClassifierTrainOptions {
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {5, 3};
};

// Cross-entropy, plain minibatch SGD with a fixed learning rate on the train
// split. Records accuracy on the test split.
MlpClassifier train_classifier(const data::Dataset& ds, const data::ScalingTransform& scaler,
                               const ClassifierTrainOptions& options,
                               const std::string& schema_fingerprint = {});

double accuracy(const Classifier& clf, const data::Dataset& ds, const data::ScalingTransform& scaler,
                std::span<const std::size_t> rows);

inline constexpr int kClassifierArtifactVersion = 1;

json classifier_to_json(const MlpClassifier& clf);
MlpClassifier classifier_from_json(const json& node);
void save_classifier(const MlpClassifier& clf, const std::string& path);
MlpClassifier load_classifier(const std::string& path);

}  // namespace recourse::model

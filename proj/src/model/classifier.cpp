#include "recourse/model/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "recourse/common/error.hpp"

namespace recourse::model {

int Classifier::predict(std::span<const double> state) const {
  const auto p = predict_proba(state);
  // Lowest index wins ties.
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> LabelOnlyClassifier::predict_proba(std::span<const double> state) const {
  std::vector<double> out(num_classes(), 0.0);
  out[static_cast<std::size_t>(inner_->predict(state))] = 1.0;
  return out;
}

InputEncoding::InputEncoding(const data::FeatureSchema& schema) {
  for (const auto& f : schema.features()) {
    category_counts_.push_back(f.is_categorical() ? f.categories.size() : 0);
  }
  encoded_dim_ = 0;
  for (auto k : category_counts_) encoded_dim_ += k == 0 ? 1 : k;
}

InputEncoding::InputEncoding(std::vector<std::size_t> category_counts)
    : category_counts_(std::move(category_counts)) {
  for (auto k : category_counts_) encoded_dim_ += k == 0 ? 1 : k;
}

void InputEncoding::encode(std::span<const double> state, std::span<double> out) const {
  if (state.size() != state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "state has width " + std::to_string(state.size()) +
                                                   ", classifier expects " +
                                                   std::to_string(state_dim()));
  }
  std::size_t pos = 0;
  for (std::size_t j = 0; j < state.size(); ++j) {
    const std::size_t k = category_counts_[j];
    if (k == 0) {
      out[pos++] = state[j];
      continue;
    }
    std::fill_n(out.begin() + static_cast<long>(pos), k, 0.0);
    const long code = std::lround(state[j]);
    if (code >= 0 && static_cast<std::size_t>(code) < k) out[pos + static_cast<std::size_t>(code)] = 1.0;
    pos += k;
  }
}

void softmax_in_place(std::span<double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logits) v /= total;
}

MlpClassifier::MlpClassifier(InputEncoding encoding, Mlp network, std::string schema_fingerprint)
    : encoding_(std::move(encoding)),
      network_(std::move(network)),
      fingerprint_(std::move(schema_fingerprint)) {
  if (network_.input_dim() != encoding_.encoded_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "network input does not match the encoding");
  }
}

std::vector<double> MlpClassifier::predict_proba(std::span<const double> state) const {
  std::vector<double> encoded(encoding_.encoded_dim());
  encoding_.encode(state, encoded);
  auto logits = network_.forward(encoded);
  softmax_in_place(logits);
  return logits;
}

double MlpClassifier::log_prob_and_grad(std::span<const double> state, int label,
                                        std::span<double> grad) const {
  std::vector<double> encoded(encoding_.encoded_dim());
  encoding_.encode(state, encoded);
  Mlp::Cache cache;
  network_.forward(encoded, cache);
  std::vector<double> p(cache.output().begin(), cache.output().end());
  softmax_in_place(p);
  const auto y = static_cast<std::size_t>(label);
  // d log p[y] / d logits = onehot(y) - p
  std::vector<double> upstream(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) upstream[c] = (c == y ? 1.0 : 0.0) - p[c];
  network_.backward(cache, upstream, grad);
  return std::log(p[y]);
}

MlpClassifier train_classifier(const data::Dataset& ds, const data::ScalingTransform& scaler,
                               const ClassifierTrainOptions& options,
                               const std::string& schema_fingerprint) {
  if (options.epochs == 0) {
    throw Error(ErrorCode::kPreconditionViolated, "classifier training needs epochs >= 1");
  }
  if (ds.split.train.empty()) throw Error(ErrorCode::kEmptySplit, "train split is empty");
  if (options.batch_size == 0 || !(options.learning_rate > 0.0)) {
    throw Error(ErrorCode::kPreconditionViolated, "batch_size and learning_rate must be positive");
  }

  InputEncoding encoding(ds.schema);
  std::vector<std::size_t> sizes{encoding.encoded_dim()};
  std::vector<Activation> activations;
  for (auto h : options.hidden) {
    sizes.push_back(h);
    activations.push_back(Activation::kRelu);
  }
  sizes.push_back(ds.schema.num_classes());
  activations.push_back(Activation::kIdentity);

  Rng rng(derive_seed(options.seed, 0xc1a55));
  Mlp net(sizes, activations);
  net.initialize(rng);
  MlpClassifier clf(encoding, std::move(net), schema_fingerprint);

  std::vector<std::vector<double>> scaled(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) scaled[r] = scaler.scale(ds.rows[r]);

  std::vector<std::size_t> order = ds.split.train;
  std::vector<double> grad(clf.network().num_params());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t r = order[k];
        epoch_loss -= clf.log_prob_and_grad(scaled[r], ds.labels[r], grad);
      }
      // grad holds d(sum log p)/dparams; descend on the mean cross-entropy.
      const double step = options.learning_rate / static_cast<double>(end - start);
      auto params = clf.mutable_network().params();
      for (std::size_t p = 0; p < params.size(); ++p) params[p] += step * grad[p];
    }
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::kDivergedLoss,
                  "classifier loss became non-finite at epoch " + std::to_string(epoch));
    }
  }
  clf.set_test_accuracy(accuracy(clf, ds, scaler, ds.split.test));
  return clf;
}

double accuracy(const Classifier& clf, const data::Dataset& ds, const data::ScalingTransform& scaler,
                std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    if (clf.predict(scaler.scale(ds.rows[r])) == ds.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

json classifier_to_json(const MlpClassifier& clf) {
  return {{"artifact_version", kClassifierArtifactVersion},
          {"kind", "mlp_classifier"},
          {"schema_fingerprint", clf.schema_fingerprint()},
          {"category_counts", clf.encoding().category_counts()},
          {"test_accuracy", to_hex_float(clf.test_accuracy())},
          {"network", clf.network().to_json()}};
}

MlpClassifier classifier_from_json(const json& node) {
  try {
    if (!node.is_object() || !node.contains("artifact_version")) {
      throw Error(ErrorCode::kCorruptArtifact, "classifier artifact lacks artifact_version");
    }
    const int version = node.at("artifact_version").get<int>();
    if (version != kClassifierArtifactVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "classifier artifact_version " + std::to_string(version) + " is not supported");
    }
    if (node.value("kind", "") != "mlp_classifier") {
      throw Error(ErrorCode::kCorruptArtifact, "not an mlp_classifier artifact");
    }
    InputEncoding encoding(node.at("category_counts").get<std::vector<std::size_t>>());
    MlpClassifier clf(std::move(encoding), Mlp::from_json(node.at("network")),
                      node.value("schema_fingerprint", ""));
    clf.set_test_accuracy(from_hex_float(node.at("test_accuracy").get<std::string>()));
    return clf;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, std::string("classifier artifact: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDimensionMismatch) throw Error(ErrorCode::kCorruptArtifact, e.what());
    throw;
  }
}

void save_classifier(const MlpClassifier& clf, const std::string& path) {
  write_text_file(path, classifier_to_json(clf).dump(1) + "\n");
}

MlpClassifier load_classifier(const std::string& path) {
  const std::string text = read_text_file(path);
  json node;
  try {
    node = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, "classifier artifact '" + path + "': " + e.what(), path);
  }
  return classifier_from_json(node);
}

}  // namespace recourse::model

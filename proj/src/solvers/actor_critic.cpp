#include "recourse/solvers/actor_critic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "recourse/common/error.hpp"
#include "recourse/model/classifier.hpp"

namespace recourse::solvers {

namespace {

model::Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  std::vector<model::Activation> acts;
  for (auto h : hidden) {
    sizes.push_back(h);
    acts.push_back(model::Activation::kTanh);
  }
  sizes.push_back(out);
  acts.push_back(model::Activation::kIdentity);
  return model::Mlp(sizes, acts);
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;

}  // namespace

double tanh_squash_step(const ActionSlot& slot, double z) {
  const double u = std::tanh(z);
  const int direction = slot.monotone == data::Monotone::kNonDecreasing   ? 1
                        : slot.monotone == data::Monotone::kNonIncreasing ? -1
                                                                          : 0;
  if (slot.categorical) {
    if (direction != 0) return direction;
    return u >= 0.0 ? 1.0 : -1.0;
  }
  if (direction != 0) return direction * (u + 1.0) / 2.0 * slot.max_step;
  return u * slot.max_step;
}

ActorCritic::ActorCritic(std::vector<ActionSlot> slots, std::vector<std::size_t> category_counts,
                         const std::vector<std::size_t>& hidden, double init_log_std, Rng& rng)
    : slots_(std::move(slots)), category_counts_(std::move(category_counts)) {
  if (slots_.empty()) throw Error(ErrorCode::kNoActionableFeatures, "policy needs at least one action slot");
  const std::size_t k = slots_.size();
  actor_ = make_mlp(state_dim(), hidden, 2 * k);
  critic_ = make_mlp(state_dim(), hidden, 1);
  actor_.initialize(rng, 0.01);
  critic_.initialize(rng, 1.0);
  log_std_.assign(k, init_log_std);
}

std::vector<ActionSlot> ActorCritic::slots_for(const mdp::Environment& env) {
  std::vector<ActionSlot> slots;
  for (const auto& f : env.action_space().features()) {
    slots.push_back({f.feature, env.schema().feature(f.feature).name, f.categorical, f.monotone, f.max_step});
  }
  return slots;
}

std::vector<std::size_t> ActorCritic::category_counts_for(const data::FeatureSchema& schema) {
  std::vector<std::size_t> counts;
  for (const auto& f : schema.features()) counts.push_back(f.is_categorical() ? f.categories.size() : 0);
  return counts;
}

void ActorCritic::normalize(std::span<const double> state, std::span<double> out) const {
  if (state.size() != state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "state width differs from the policy's input width");
  }
  for (std::size_t j = 0; j < state.size(); ++j) {
    const std::size_t k = category_counts_[j];
    out[j] = k == 0 ? state[j] : (k == 1 ? 0.0 : 2.0 * state[j] / static_cast<double>(k - 1) - 1.0);
  }
}

ActorCritic::Head ActorCritic::head(std::span<const double> state) const {
  thread_local model::Mlp::Cache cache;
  thread_local std::vector<double> input;
  input.resize(state_dim());
  normalize(state, input);
  actor_.forward(input, cache);
  const auto out = cache.output();
  const std::size_t k = num_slots();
  Head h;
  h.probs.assign(out.begin(), out.begin() + static_cast<long>(k));
  model::softmax_in_place(h.probs);
  h.mean.assign(out.begin() + static_cast<long>(k), out.end());
  return h;
}

std::vector<double> ActorCritic::feature_probabilities(std::span<const double> state) const {
  const auto h = head(state);
  std::vector<double> out(state_dim(), 0.0);
  for (std::size_t k = 0; k < num_slots(); ++k) out[slots_[k].feature] = h.probs[k];
  return out;
}

bool ActorCritic::uses_magnitude(std::size_t slot) const {
  const auto& s = slots_[slot];
  return !(s.categorical && s.monotone != data::Monotone::kNone);
}

Action ActorCritic::to_action(std::size_t slot, double z) const {
  return Action{slots_.at(slot).feature, tanh_squash_step(slots_[slot], z)};
}

double ActorCritic::log_prob(const Head& h, std::size_t slot, double z) const {
  double lp = std::log(std::max(h.probs[slot], 1e-300));
  if (uses_magnitude(slot)) {
    const double ls = log_std_[slot];
    const double e = (z - h.mean[slot]) * std::exp(-ls);
    lp += -0.5 * e * e - ls - kHalfLog2Pi;
  }
  return lp;
}

SampledAction ActorCritic::sample(std::span<const double> state, Rng& rng) const {
  const Head h = head(state);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t slot = num_slots() - 1;
  for (std::size_t k = 0; k < num_slots(); ++k) {
    cumulative += h.probs[k];
    if (u < cumulative) {
      slot = k;
      break;
    }
  }
  SampledAction out;
  out.slot = slot;
  out.z = uses_magnitude(slot) ? h.mean[slot] + std::exp(log_std_[slot]) * standard_normal(rng) : 0.0;
  out.log_prob = log_prob(h, slot, out.z);
  out.action = to_action(slot, out.z);
  return out;
}

Action ActorCritic::greedy(std::span<const double> state) const {
  thread_local model::Mlp::Cache cache;
  thread_local std::vector<double> input;
  input.resize(state_dim());
  normalize(state, input);
  actor_.forward(input, cache);
  const auto out = cache.output();
  const std::size_t k = num_slots();
  // Softmax is monotone: the largest logit is the most likely feature.
  const auto slot = static_cast<std::size_t>(std::max_element(out.begin(), out.begin() + static_cast<long>(k)) -
                                             out.begin());
  return to_action(slot, out[k + slot]);
}

double ActorCritic::value(std::span<const double> state) const {
  thread_local model::Mlp::Cache cache;
  thread_local std::vector<double> input;
  input.resize(state_dim());
  normalize(state, input);
  critic_.forward(input, cache);
  return cache.output()[0];
}

json ActorCritic::to_json() const {
  json slots = json::array();
  for (const auto& s : slots_) {
    slots.push_back({{"feature", s.feature},
                     {"name", s.name},
                     {"categorical", s.categorical},
                     {"monotone", data::to_string(s.monotone)},
                     {"max_step", to_hex_float(s.max_step)}});
  }
  return {{"slots", slots},
          {"category_counts", category_counts_},
          {"actor", actor_.to_json()},
          {"critic", critic_.to_json()},
          {"log_std", hex_array(log_std_)}};
}

ActorCritic ActorCritic::from_json(const json& node) {
  try {
    ActorCritic ac;
    for (const auto& s : node.at("slots")) {
      ac.slots_.push_back({s.at("feature").get<std::size_t>(), s.at("name").get<std::string>(),
                           s.at("categorical").get<bool>(), data::parse_monotone(s.at("monotone").get<std::string>()),
                           from_hex_float(s.at("max_step").get<std::string>())});
    }
    ac.category_counts_ = node.at("category_counts").get<std::vector<std::size_t>>();
    ac.actor_ = model::Mlp::from_json(node.at("actor"));
    ac.critic_ = model::Mlp::from_json(node.at("critic"));
    ac.log_std_ = parse_hex_array(node.at("log_std"));
    const std::size_t k = ac.slots_.size();
    if (k == 0 || ac.actor_.input_dim() != ac.state_dim() || ac.actor_.output_dim() != 2 * k ||
        ac.critic_.input_dim() != ac.state_dim() || ac.critic_.output_dim() != 1 || ac.log_std_.size() != k) {
      throw Error(ErrorCode::kCorruptArtifact, "policy network shapes are inconsistent");
    }
    for (const auto& s : ac.slots_) {
      if (s.feature >= ac.state_dim()) throw Error(ErrorCode::kCorruptArtifact, "policy slot out of range");
    }
    return ac;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, std::string("policy networks: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidSchema) throw Error(ErrorCode::kCorruptArtifact, e.what());
    throw;
  }
}

}  // namespace recourse::solvers

#include "recourse/solvers/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "recourse/common/error.hpp"
#include "recourse/model/classifier.hpp"
#include "recourse/solvers/gae.hpp"

namespace recourse::solvers {

namespace {

constexpr double kMinLogStd = -4.0;
constexpr double kMaxLogStd = 1.0;

struct Transition {
  State state;
  std::size_t slot;
  double z;
  double log_prob;
  double reward;
  double value;
  bool terminal;
};

struct Segment {
  std::size_t begin;
  std::size_t end;
  double bootstrap;
};

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kPreconditionViolated, std::string(name) + " must be positive", name);
  }
}

}  // namespace

void PpoConfig::validate() const {
  if (total_env_steps == 0) {
    throw Error(ErrorCode::kPreconditionViolated, "total_env_steps must be at least 1", "total_env_steps");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kPreconditionViolated, "gamma must lie in [0, 1]", "gamma");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw Error(ErrorCode::kPreconditionViolated, "gae_lambda must lie in [0, 1]", "gae_lambda");
  }
  require_positive(clip_epsilon, "clip_epsilon");
  require_positive(lr_actor, "lr_actor");
  require_positive(lr_critic, "lr_critic");
  require_positive(max_grad_norm, "max_grad_norm");
  if (!(entropy_coef >= 0.0)) throw Error(ErrorCode::kPreconditionViolated, "entropy_coef must be >= 0", "entropy_coef");
  if (epochs_per_batch == 0 || rollout_batch_size == 0 || minibatch_size == 0 || episode_step_cap == 0) {
    throw Error(ErrorCode::kPreconditionViolated, "batch sizes, epochs and the episode cap must be positive");
  }
  if (hidden.empty()) throw Error(ErrorCode::kPreconditionViolated, "policy needs at least one hidden layer", "hidden");
}

json ppo_config_to_json(const PpoConfig& cfg) {
  return {{"gamma", cfg.gamma},
          {"gae_lambda", cfg.gae_lambda},
          {"clip_epsilon", cfg.clip_epsilon},
          {"epochs_per_batch", cfg.epochs_per_batch},
          {"rollout_batch_size", cfg.rollout_batch_size},
          {"minibatch_size", cfg.minibatch_size},
          {"lr_actor", cfg.lr_actor},
          {"lr_critic", cfg.lr_critic},
          {"entropy_coef", cfg.entropy_coef},
          {"max_grad_norm", cfg.max_grad_norm},
          {"init_log_std", cfg.init_log_std},
          {"hidden", cfg.hidden},
          {"total_env_steps", cfg.total_env_steps},
          {"episode_step_cap", cfg.episode_step_cap},
          {"seed", cfg.seed}};
}

PpoConfig ppo_config_from_json(const json& node) {
  PpoConfig cfg;
  try {
    cfg.gamma = node.value("gamma", cfg.gamma);
    cfg.gae_lambda = node.value("gae_lambda", cfg.gae_lambda);
    cfg.clip_epsilon = node.value("clip_epsilon", cfg.clip_epsilon);
    cfg.epochs_per_batch = node.value("epochs_per_batch", cfg.epochs_per_batch);
    cfg.rollout_batch_size = node.value("rollout_batch_size", cfg.rollout_batch_size);
    cfg.minibatch_size = node.value("minibatch_size", cfg.minibatch_size);
    cfg.lr_actor = node.value("lr_actor", cfg.lr_actor);
    cfg.lr_critic = node.value("lr_critic", cfg.lr_critic);
    cfg.entropy_coef = node.value("entropy_coef", cfg.entropy_coef);
    cfg.max_grad_norm = node.value("max_grad_norm", cfg.max_grad_norm);
    cfg.init_log_std = node.value("init_log_std", cfg.init_log_std);
    cfg.hidden = node.value("hidden", cfg.hidden);
    cfg.total_env_steps = node.value("total_env_steps", cfg.total_env_steps);
    cfg.episode_step_cap = node.value("episode_step_cap", cfg.episode_step_cap);
    cfg.seed = node.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("ppo config: ") + e.what());
  }
  return cfg;
}

void check_fingerprint(const PolicyArtifact& artifact, const mdp::Environment& env) {
  if (artifact.schema_fingerprint != env.fingerprint()) {
    throw Error(ErrorCode::kFingerprintMismatch, "policy was trained for schema " + artifact.schema_fingerprint +
                                                     ", environment has " + env.fingerprint());
  }
}

Action act(const PolicyArtifact& artifact, std::span<const double> state, ActMode mode, Rng& rng) {
  if (mode == ActMode::kGreedy) return artifact.networks.greedy(state);
  return artifact.networks.sample(state, rng).action;
}

StartSampler uniform_start_sampler(std::vector<State> starts) {
  if (starts.empty()) throw Error(ErrorCode::kNoNegativeDatapoints, "no start states to sample from");
  return [starts = std::move(starts)](Rng& rng) {
    const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(starts.size()));
    return starts[std::min(i, starts.size() - 1)];
  };
}

std::vector<State> negative_states(const mdp::CfeMdp& mdp, const data::Dataset& ds,
                                   std::span<const std::size_t> rows) {
  std::vector<State> out;
  for (auto r : rows) {
    State s = mdp.scaler().scale(ds.rows[r]);
    if (!mdp.is_goal(s)) out.push_back(std::move(s));
  }
  return out;
}

std::vector<State> negative_train_states(const mdp::CfeMdp& mdp, const data::Dataset& ds) {
  auto out = negative_states(mdp, ds, ds.split.train);
  if (out.empty()) {
    throw Error(ErrorCode::kNoNegativeDatapoints, "no training row is predicted as the undesired label");
  }
  return out;
}

PolicyArtifact ppo_train(const mdp::Environment& env, const StartSampler& sampler, const PpoConfig& cfg,
                         const ProgressCallback& progress) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x9907));
  ActorCritic ac(ActorCritic::slots_for(env), ActorCritic::category_counts_for(env.schema()), cfg.hidden,
                 cfg.init_log_std, rng);
  const std::size_t k = ac.num_slots();
  model::Adam actor_opt(ac.actor().num_params(), {cfg.lr_actor});
  model::Adam std_opt(k, {cfg.lr_actor});
  model::Adam critic_opt(ac.critic().num_params(), {cfg.lr_critic});

  PolicyArtifact artifact;
  artifact.schema_fingerprint = env.fingerprint();
  artifact.config = cfg;

  std::vector<Transition> batch;
  std::vector<Segment> segments;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> actor_grad(ac.actor().num_params());
  std::vector<double> std_grad(k);
  std::vector<double> critic_grad(ac.critic().num_params());
  std::vector<double> out_grad(2 * k);
  std::vector<double> input(ac.state_dim());
  std::vector<double> probs(k);
  model::Mlp::Cache cache;
  model::Mlp::Cache critic_cache;
  std::vector<std::size_t> order;

  State s = sampler(rng);
  std::size_t episode_len = 0;
  double episode_return = 0.0;
  std::size_t steps = 0;

  while (steps < cfg.total_env_steps) {
    const std::size_t n = std::min(cfg.rollout_batch_size, cfg.total_env_steps - steps);
    batch.clear();
    segments.clear();
    std::size_t segment_begin = 0;
    double finished_return = 0.0;
    std::size_t finished = 0;
    std::size_t reached = 0;

    for (std::size_t i = 0; i < n; ++i) {
      const SampledAction sa = ac.sample(s, rng);
      const double v = ac.value(s);
      mdp::StepResult res = env.step(s, sa.action, rng);
      batch.push_back({s, sa.slot, sa.z, sa.log_prob, res.reward, v, res.terminal});
      episode_return += res.reward;
      ++episode_len;
      ++steps;
      if (res.terminal || episode_len >= cfg.episode_step_cap) {
        segments.push_back({segment_begin, batch.size(), res.terminal ? 0.0 : ac.value(res.next)});
        segment_begin = batch.size();
        finished_return += episode_return;
        ++finished;
        if (res.terminal) ++reached;
        s = sampler(rng);
        episode_len = 0;
        episode_return = 0.0;
      } else {
        s = std::move(res.next);
      }
    }
    if (segment_begin < batch.size()) segments.push_back({segment_begin, batch.size(), ac.value(s)});

    // Advantages, one episode segment at a time.
    advantages.assign(batch.size(), 0.0);
    returns.assign(batch.size(), 0.0);
    for (const auto& seg : segments) {
      const std::size_t len = seg.end - seg.begin;
      std::vector<double> r(len);
      std::vector<double> v(len + 1);
      std::unique_ptr<bool[]> done(new bool[len]);
      for (std::size_t t = 0; t < len; ++t) {
        r[t] = batch[seg.begin + t].reward;
        v[t] = batch[seg.begin + t].value;
        done[t] = batch[seg.begin + t].terminal;
      }
      v[len] = seg.bootstrap;
      const auto adv = gae_advantages(r, v, std::span<const bool>(done.get(), len), cfg.gamma, cfg.gae_lambda);
      for (std::size_t t = 0; t < len; ++t) {
        advantages[seg.begin + t] = adv[t];
        returns[seg.begin + t] = adv[t] + v[t];
      }
    }
    if (advantages.size() > 1) {
      const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) /
                          static_cast<double>(advantages.size());
      double var = 0.0;
      for (double a : advantages) var += (a - mean) * (a - mean);
      const double sd = std::sqrt(var / static_cast<double>(advantages.size()));
      for (double& a : advantages) a = (a - mean) / (sd + 1e-8);
    }

    order.resize(batch.size());
    std::iota(order.begin(), order.end(), 0);
    double loss_total = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
      }
      for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.minibatch_size);
        const double scale = 1.0 / static_cast<double>(end - start);
        std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
        std::fill(std_grad.begin(), std_grad.end(), 0.0);
        std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
        for (std::size_t m = start; m < end; ++m) {
          const Transition& tr = batch[order[m]];
          const double adv = advantages[order[m]];
          ac.normalize(tr.state, input);
          ac.actor().forward(input, cache);
          const auto out = cache.output();
          std::copy(out.begin(), out.begin() + static_cast<long>(k), probs.begin());
          model::softmax_in_place(probs);

          double entropy = 0.0;
          for (double p : probs) entropy -= p > 0.0 ? p * std::log(p) : 0.0;
          const std::size_t slot = tr.slot;
          double log_prob = std::log(std::max(probs[slot], 1e-300));
          const bool magnitude = ac.uses_magnitude(slot);
          const double mu = out[k + slot];
          const double ls = ac.log_std()[slot];
          const double inv_var = std::exp(-2.0 * ls);
          if (magnitude) {
            const double e = (tr.z - mu) * std::exp(-ls);
            log_prob += -0.5 * e * e - ls - 0.91893853320467274178;
          }
          const double ratio = std::exp(log_prob - tr.log_prob);
          loss_total += ppo_clip_loss(ratio, adv, cfg.clip_epsilon) - cfg.entropy_coef * entropy;
          const double g = ppo_clip_loss_grad(ratio, adv, cfg.clip_epsilon) * ratio;  // dL/dlogp

          std::fill(out_grad.begin(), out_grad.end(), 0.0);
          for (std::size_t j = 0; j < k; ++j) {
            const double onehot = j == slot ? 1.0 : 0.0;
            const double log_pj = std::log(std::max(probs[j], 1e-300));
            out_grad[j] = scale * (g * (onehot - probs[j]) + cfg.entropy_coef * probs[j] * (log_pj + entropy));
          }
          if (magnitude) {
            out_grad[k + slot] = scale * g * (tr.z - mu) * inv_var;
            const double e2 = (tr.z - mu) * (tr.z - mu) * inv_var;
            std_grad[slot] += scale * g * (e2 - 1.0);
          }
          ac.actor().backward(cache, out_grad, actor_grad);

          ac.critic().forward(input, critic_cache);
          const double v = critic_cache.output()[0];
          const double diff = v - returns[order[m]];
          loss_total += 0.5 * diff * diff;
          const double cg = scale * diff;
          ac.critic().backward(critic_cache, std::span<const double>(&cg, 1), critic_grad);
        }
        for (std::size_t j = 0; j < k; ++j) std_grad[j] -= cfg.entropy_coef / static_cast<double>(k);
        if (!std::isfinite(loss_total)) {
          throw Error(ErrorCode::kDivergedLoss, "PPO loss became non-finite after " + std::to_string(steps) +
                                                    " environment steps");
        }
        model::clip_grad_norm(actor_grad, cfg.max_grad_norm);
        model::clip_grad_norm(std_grad, cfg.max_grad_norm);
        model::clip_grad_norm(critic_grad, cfg.max_grad_norm);
        actor_opt.step(ac.actor().params(), actor_grad);
        std_opt.step(ac.log_std(), std_grad);
        critic_opt.step(ac.critic().params(), critic_grad);
        for (double& l : ac.log_std()) l = std::clamp(l, kMinLogStd, kMaxLogStd);
      }
    }

    TrainingPoint point;
    point.env_steps = steps;
    point.episodes = finished;
    point.mean_episode_return = finished > 0 ? finished_return / static_cast<double>(finished) : 0.0;
    point.terminal_rate = finished > 0 ? static_cast<double>(reached) / static_cast<double>(finished) : 0.0;
    artifact.curve.push_back(point);
    if (progress) progress(point);
  }
  artifact.networks = std::move(ac);
  return artifact;
}

json policy_to_json(const PolicyArtifact& artifact) {
  json curve = json::array();
  for (const auto& p : artifact.curve) {
    curve.push_back({{"env_steps", p.env_steps},
                     {"episodes", p.episodes},
                     {"mean_episode_return", p.mean_episode_return},
                     {"terminal_rate", p.terminal_rate}});
  }
  return {{"artifact_version", kPolicyArtifactVersion},
          {"kind", "ppo_policy"},
          {"schema_fingerprint", artifact.schema_fingerprint},
          {"config", ppo_config_to_json(artifact.config)},
          {"environment", artifact.environment},
          {"networks", artifact.networks.to_json()},
          {"training_curve", curve}};
}

PolicyArtifact policy_from_json(const json& node) {
  try {
    if (!node.is_object() || !node.contains("artifact_version")) {
      throw Error(ErrorCode::kCorruptArtifact, "policy artifact lacks artifact_version");
    }
    const int version = node.at("artifact_version").get<int>();
    if (version != kPolicyArtifactVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "policy artifact_version " + std::to_string(version) + " is not supported");
    }
    if (node.value("kind", "") != "ppo_policy") throw Error(ErrorCode::kCorruptArtifact, "not a ppo_policy artifact");
    PolicyArtifact a;
    a.schema_fingerprint = node.at("schema_fingerprint").get<std::string>();
    a.config = ppo_config_from_json(node.at("config"));
    a.environment = node.value("environment", json());
    a.networks = ActorCritic::from_json(node.at("networks"));
    for (const auto& p : node.value("training_curve", json::array())) {
      a.curve.push_back({p.at("env_steps").get<std::size_t>(), p.at("mean_episode_return").get<double>(),
                         p.at("terminal_rate").get<double>(), p.at("episodes").get<std::size_t>()});
    }
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, std::string("policy artifact: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw Error(ErrorCode::kCorruptArtifact, e.what());
    throw;
  }
}

void save_policy(const PolicyArtifact& artifact, const std::string& path) {
  write_text_file(path, policy_to_json(artifact).dump(1) + "\n");
}

PolicyArtifact load_policy(const std::string& path) {
  const std::string text = read_text_file(path);
  json node;
  try {
    node = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, "policy artifact '" + path + "': " + e.what(), path);
  }
  return policy_from_json(node);
}

}  // namespace recourse::solvers

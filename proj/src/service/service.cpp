#include "recourse/service/service.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "recourse/common/error.hpp"

namespace recourse::service {

namespace {

// Carries the fired constraint tag of a rejected /simulate action.
class ActionRejected : public Error {
 public:
  ActionRejected(const causal::Violation& v, const std::string& feature)
      : Error(ErrorCode::kDisallowedAction, v.message, feature), constraint(v.constraint) {}
  std::string constraint;
};

json parse_request(const std::string& body) {
  json request = json::parse(body, nullptr, false);
  if (request.is_discarded()) throw Error(ErrorCode::kPreconditionViolated, "request body is not valid JSON");
  if (!request.is_object()) throw Error(ErrorCode::kPreconditionViolated, "request body must be a JSON object");
  return request;
}

std::uint64_t read_seed(const json& request) {
  if (!request.contains("seed")) return 0;
  const json& node = request["seed"];
  if (!node.is_number_unsigned()) {
    throw Error(ErrorCode::kPreconditionViolated, "seed must be a non-negative integer", "seed");
  }
  return node.get<std::uint64_t>();
}

const json& require_field(const json& request, const char* key) {
  if (!request.contains(key)) throw Error(ErrorCode::kMissingValue, std::string("missing '") + key + "'", key);
  return request[key];
}

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

json error_body(const std::string& code, const std::string& message, const std::string& field) {
  return {{"code", code}, {"message", message}, {"field", field.empty() ? json(nullptr) : json(field)}};
}

}  // namespace

RecourseService::RecourseService(std::shared_ptr<const mdp::Environment> env,
                                 std::shared_ptr<const solvers::Policy> policy, std::string schema_text,
                                 std::optional<json> report)
    : env_(std::move(env)),
      policy_(std::move(policy)),
      schema_text_(std::move(schema_text)),
      report_(std::move(report)),
      codec_(env_->schema()) {
  policy_->check_compatible(*env_);
}

HttpResponse RecourseService::get_schema() const { return {200, "application/json", schema_text_}; }

HttpResponse RecourseService::get_metrics() const {
  if (!report_) return json_response(404, error_body("NotFound", "no evaluation report has been loaded", ""));
  const ServiceCounters c = counters();
  return json_response(200, {{"report", *report_},
                             {"counters", {{"suggest", c.suggest}, {"simulate", c.simulate}, {"errors", c.errors}}}});
}

HttpResponse RecourseService::post_suggest(const std::string& body) const {
  return guarded(n_suggest_, body, &RecourseService::suggest);
}

HttpResponse RecourseService::post_simulate(const std::string& body) const {
  return guarded(n_simulate_, body, &RecourseService::simulate);
}

HttpResponse RecourseService::handle(const std::string& method, const std::string& path,
                                     const std::string& body) const {
  if (method == "GET" && path == "/schema") return get_schema();
  if (method == "GET" && path == "/metrics") return get_metrics();
  if (method == "POST" && path == "/suggest") return post_suggest(body);
  if (method == "POST" && path == "/simulate") return post_simulate(body);
  return json_response(404, error_body("NotFound", "no route for " + method + " " + path, ""));
}

ServiceCounters RecourseService::counters() const {
  return {n_suggest_.load(), n_simulate_.load(), n_errors_.load()};
}

HttpResponse RecourseService::guarded(std::atomic<std::uint64_t>& counter, const std::string& body,
                                      json (RecourseService::*handler)(const json&) const) const {
  ++counter;
  try {
    return json_response(200, (this->*handler)(parse_request(body)));
  } catch (const ActionRejected& e) {
    ++n_errors_;
    json err = error_body(std::string(error_code_name(e.code())), e.what(), e.field());
    err["constraint"] = e.constraint;
    return json_response(400, err);
  } catch (const Error& e) {
    ++n_errors_;
    const int status = e.code() == ErrorCode::kFingerprintMismatch ? 409 : 400;
    return json_response(status, error_body(std::string(error_code_name(e.code())), e.what(), e.field()));
  } catch (const json::exception& e) {
    ++n_errors_;
    return json_response(400, error_body("PreconditionViolated", e.what(), ""));
  }
}

void RecourseService::check_request_fingerprint(const json& request) const {
  if (!request.contains("schema_fingerprint")) return;
  const json& node = request["schema_fingerprint"];
  if (!node.is_string() || node.get<std::string>() != env_->fingerprint()) {
    throw Error(ErrorCode::kFingerprintMismatch, "request targets a different schema than the served policy",
                "schema_fingerprint");
  }
}

std::optional<Action> RecourseService::suggest_action(std::span<const double> s, std::uint64_t seed) const {
  Rng policy_rng(derive_seed(seed, 1));
  const Action proposed = policy_->act(*env_, s, policy_rng);
  if (env_->is_legal(s, proposed)) return proposed;

  if (const auto slot = env_->action_space().slot_of(proposed.feature); slot && std::isfinite(proposed.delta)) {
    const mdp::ActionFeature& f = env_->action_space().features()[*slot];
    if (!f.categorical) {
      double delta = std::clamp(s[f.feature] + proposed.delta, f.lo, f.hi) - s[f.feature];
      delta = std::clamp(delta, -f.max_step, f.max_step);
      const Action clipped{f.feature, delta};
      if (std::abs(delta) > 1e-12 && env_->is_legal(s, clipped)) return clipped;
    }
  }

  std::optional<Action> best;
  double best_reward = -std::numeric_limits<double>::infinity();
  for (const Action& a : env_->discrete_actions()) {
    if (!env_->is_legal(s, a)) continue;
    Rng rng(seed);
    const double r = env_->step(s, a, rng).reward;
    if (!best || r > best_reward) {
      best = a;
      best_reward = r;
    }
  }
  return best;
}

json RecourseService::suggest(const json& request) const {
  check_request_fingerprint(request);
  const std::uint64_t seed = read_seed(request);
  const State s = codec_.state_from_json(require_field(request, "state"));
  env_->validate_state(s);

  std::size_t steps_taken = 0;
  if (request.contains("steps_taken")) {
    if (!request["steps_taken"].is_number_unsigned()) {
      throw Error(ErrorCode::kPreconditionViolated, "steps_taken must be a non-negative integer", "steps_taken");
    }
    steps_taken = request["steps_taken"].get<std::size_t>();
  }
  const std::size_t budget = env_->step_cap() - std::min(steps_taken, env_->step_cap());

  json out = {{"p_desired", env_->desired_probability(s)},
              {"step_budget_remaining", budget},
              {"seed", seed},
              {"schema_fingerprint", env_->fingerprint()}};
  const bool counterfactual = env_->is_counterfactual(s);
  out["is_counterfactual"] = counterfactual;
  std::optional<Action> action;
  if (!counterfactual && budget > 0) action = suggest_action(s, seed);
  if (!action) {
    out["action"] = nullptr;
    out["predicted_next_state"] = codec_.state_to_json(s);
    out["predicted_p_desired"] = env_->desired_probability(s);
    out["predicted_is_counterfactual"] = counterfactual;
    return out;
  }
  // Same stream as /simulate with this seed, so the prediction replays.
  Rng rng(seed);
  const mdp::StepResult res = env_->step(s, *action, rng);
  out["action"] = codec_.action_to_json(*action);
  out["predicted_next_state"] = codec_.state_to_json(res.next);
  out["predicted_p_desired"] = env_->desired_probability(res.next);
  out["predicted_is_counterfactual"] = res.terminal || env_->is_counterfactual(res.next);
  return out;
}

json RecourseService::simulate(const json& request) const {
  check_request_fingerprint(request);
  const std::uint64_t seed = read_seed(request);
  const State s = codec_.state_from_json(require_field(request, "state"));
  env_->validate_state(s);
  const Action a = codec_.action_from_json(require_field(request, "action"));
  if (const auto v = env_->check_action(s, a)) {
    throw ActionRejected(*v, env_->schema().feature(v->feature).name);
  }
  Rng rng(seed);
  const mdp::StepResult res = env_->step(s, a, rng);
  return {{"next_state", codec_.state_to_json(res.next)},
          {"p_desired", env_->desired_probability(res.next)},
          {"manifold_distance", env_->manifold_distance(res.next)},
          {"causal_ok", causal::step_respects_causality(env_->causal_model(), env_->schema(), s, a, res.next)},
          {"is_counterfactual", res.terminal || env_->is_counterfactual(res.next)},
          {"reward", res.reward},
          {"seed", seed}};
}

}  // namespace recourse::service

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "recourse/common/serialization.hpp"
#include "recourse/mdp/codec.hpp"
#include "recourse/mdp/environment.hpp"
#include "recourse/solvers/policy.hpp"

namespace recourse::service {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ServiceCounters {
  std::uint64_t suggest = 0;
  std::uint64_t simulate = 0;
  std::uint64_t errors = 0;
};

// Request handlers of the recourse HTTP API, independent of the transport.
// All payloads are in original units. Handlers are safe to call
// concurrently; apart from the request counters nothing is modified.
//
//   GET  /schema    the schema document, byte for byte
//   GET  /metrics   last evaluation report and request counters (404 if none)
//   POST /suggest   {state, seed?, steps_taken?, schema_fingerprint?}
//   POST /simulate  {state, action: {feature, delta}, seed?, schema_fingerprint?}
//
// Errors are {code, message, field} with status 400, or 409 when the
// request names a schema fingerprint other than the served one.
class RecourseService {
 public:
  // Throws FingerprintMismatch when the policy does not match `env`.
  RecourseService(std::shared_ptr<const mdp::Environment> env, std::shared_ptr<const solvers::Policy> policy,
                  std::string schema_text, std::optional<json> report = std::nullopt);

  HttpResponse get_schema() const;
  HttpResponse get_metrics() const;
  HttpResponse post_suggest(const std::string& body) const;
  HttpResponse post_simulate(const std::string& body) const;

  // Dispatches on method and path; unknown routes give 404.
  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

  ServiceCounters counters() const;
  const mdp::Environment& environment() const { return *env_; }

  // The legal action the service recommends at `s`: the policy's action
  // when legal, else the policy's action clipped into the feature domain,
  // else the best-rewarded legal discrete action. Empty when nothing is
  // legal.
  std::optional<Action> suggest_action(std::span<const double> s, std::uint64_t seed) const;

 private:
  json suggest(const json& request) const;
  json simulate(const json& request) const;
  void check_request_fingerprint(const json& request) const;
  HttpResponse guarded(std::atomic<std::uint64_t>& counter, const std::string& body,
                       json (RecourseService::*handler)(const json&) const) const;

  std::shared_ptr<const mdp::Environment> env_;
  std::shared_ptr<const solvers::Policy> policy_;
  std::string schema_text_;
  std::optional<json> report_;
  mdp::StateCodec codec_;
  mutable std::atomic<std::uint64_t> n_suggest_{0};
  mutable std::atomic<std::uint64_t> n_simulate_{0};
  mutable std::atomic<std::uint64_t> n_errors_{0};
};

// HTTP/1.1 transport for a RecourseService (thread-pooled).
class HttpServer {
 public:
  explicit HttpServer(const RecourseService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds the address; port 0 picks a free port. Returns the bound port.
  // Throws PreconditionViolated on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called from another thread.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace recourse::service

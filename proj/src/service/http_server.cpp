#include <httplib.h>

#include "recourse/common/error.hpp"
#include "recourse/service/service.hpp"

namespace recourse::service {

struct HttpServer::Impl {
  explicit Impl(const RecourseService& svc) : service(svc) {}
  const RecourseService& service;
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(const RecourseService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  const RecourseService& svc = impl_->service;
  srv.Get("/schema", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.get_schema()); });
  srv.Get("/metrics", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.get_metrics()); });
  srv.Post("/suggest", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.post_suggest(req.body));
  });
  srv.Post("/simulate", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.post_simulate(req.body));
  });
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const json body = {{"code", "NotFound"}, {"message", "no route for " + req.method + " " + req.path}, {"field", nullptr}};
    res.set_content(body.dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorCode::kPreconditionViolated, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace recourse::service

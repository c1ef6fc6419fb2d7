#pragma once

#include <memory>
#include <string>

#include <httplib.h>

#include "service.hpp"

namespace treelp::service {

inline void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

/// An httplib server with every endpoint bound to `svc`, which must outlive it.
inline std::unique_ptr<httplib::Server> make_server(const Service& svc) {
  auto server = std::make_unique<httplib::Server>();
  server->Get("/health", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
  server->Get("/model", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.model()); });
  server->Get("/schema", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.schema()); });
  server->Get(R"(/programs/([a-z]+))",
              [&svc](const httplib::Request& req, httplib::Response& res) { send(res, svc.program(req.matches[1])); });
  server->Post("/explain", [&svc](const httplib::Request& req, httplib::Response& res) { send(res, svc.explain(req.body)); });
  server->Post("/whatif", [&svc](const httplib::Request& req, httplib::Response& res) { send(res, svc.whatif(req.body)); });
  server->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, detail::error_response(500, what));
  });
  return server;
}

}  // namespace treelp::service

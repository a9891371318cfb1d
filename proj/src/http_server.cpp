#include "resus/http_server.hpp"

#include <httplib.h>

#include <stdexcept>

namespace resus {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kNdjson = "application/x-ndjson";

void send_error(httplib::Response& res, int status, const std::string& text, json extra = json::object()) {
  extra["error"] = text;
  res.status = status;
  res.set_content(extra.dump(), kJson);
}

std::uint64_t query_u64(const httplib::Request& req, const char* name, std::uint64_t fallback) {
  if (!req.has_param(name)) return fallback;
  return std::stoull(req.get_param_value(name));
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(SessionService& svc) : service(svc) { install_routes(); }

  void install_routes();

  // Maps service exceptions onto status codes.
  template <class F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const UnknownSessionError& ex) {
      send_error(res, 404, ex.what());
    } catch (const ConfigError& ex) {
      send_error(res, 400, ex.what(), json{{"fields", ex.fields()}});
    } catch (const json::exception& ex) {
      send_error(res, 400, ex.what());
    } catch (const std::invalid_argument& ex) {
      send_error(res, 400, ex.what());
    } catch (const std::exception& ex) {
      send_error(res, 500, ex.what());
    }
  }

  SessionService& service;
  httplib::Server server;
};

void HttpServer::Impl::install_routes() {
  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json overrides = req.body.empty() ? json(nullptr) : json::parse(req.body);
      std::string id = service.create_session(overrides);
      res.status = 201;
      res.set_content(json{{"session_id", id}}.dump(), kJson);
    });
  });

  server.Post("/sessions/:id/commands", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = json::parse(req.body);
      auto name = body.at("kind").get<std::string>();
      auto kind = parse_command_kind(name);
      if (!kind) throw std::invalid_argument("unknown command kind '" + name + "'");
      std::string text;
      if (body.contains("payload") && body["payload"].contains("text")) {
        text = body["payload"]["text"].get<std::string>();
      }
      Ack ack = service.submit_command(req.path_params.at("id"), *kind, text);
      res.set_content(ack_to_json(ack).dump(), kJson);
    });
  });

  server.Get("/sessions/:id/snapshot", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { res.set_content(snapshot_to_json(service.snapshot(req.path_params.at("id"))).dump(), kJson); });
  });

  server.Get("/sessions/:id/export", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { res.set_content(service.export_session(req.path_params.at("id")), kNdjson); });
  });

  server.Get("/sessions/:id/events", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string id = req.path_params.at("id");
      std::uint64_t from = std::max<std::uint64_t>(1, query_u64(req, "from_seq", 1));
      bool follow = query_u64(req, "follow", 1) != 0;
      // Resolve the session now so unknown ids get a 404 instead of an empty stream.
      EventBatch first = service.events_since(id, from);
      if (!follow) {
        std::string body;
        for (const Event& e : first.events) body += event_to_json(e).dump() + "\n";
        res.set_content(body, kNdjson);
        return;
      }
      auto next = std::make_shared<std::uint64_t>(from);
      res.set_chunked_content_provider(kNdjson, [this, id, next](std::size_t, httplib::DataSink& sink) {
        EventBatch batch = service.wait_events(id, *next, std::chrono::milliseconds(500));
        for (const Event& e : batch.events) {
          std::string line = event_to_json(e).dump() + "\n";
          if (!sink.write(line.data(), line.size())) return false;
          *next = e.seq + 1;
        }
        if (batch.end_of_stream) {
          sink.done();
          return true;
        }
        return sink.is_writable() && server.is_running();
      });
    });
  });
}

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace resus

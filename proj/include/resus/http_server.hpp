#pragma once

// HTTP front end for SessionService.
//
//   POST /sessions                       body: config overrides (optional)  -> {"session_id"}
//   POST /sessions/{id}/commands         body: {"kind": "...", "payload": {"text": "..."}} -> ack
//   GET  /sessions/{id}/snapshot                                            -> snapshot
//   GET  /sessions/{id}/events?from_seq=N[&follow=0]                        -> NDJSON event feed
//   GET  /sessions/{id}/export                                              -> session file bytes
//
// The event feed stays open (chunked) until the session ends or the client
// goes away; follow=0 returns the history and closes.

#include <memory>
#include <string>
#include <thread>

#include "resus/service.hpp"

namespace resus {

class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread. port 0 picks a free port.
  // Returns the bound port; throws std::runtime_error if binding fails.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace resus

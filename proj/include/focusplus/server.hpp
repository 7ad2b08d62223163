#pragma once

// HTTP + WebSocket front end for ServiceCore (Boost.Beast, one port).
//
//   POST /v1/sessions                      body: meta record                 -> ok record
//   GET  /v1/stream  (WebSocket upgrade)   text frames of pkt / meta lines  -> ack / ok / error lines
//   POST /v1/packets                       body: pkt lines                   -> ack / error lines
//   GET  /v1/classes/<class>/dashboard                                       -> JSON snapshot
//   GET  /v1/logs/<user>/<session>                                           -> session record (FPSR)
//   POST /v1/sessions/<session>/survey     body: survey record               -> ok record
//   GET  /v1/reports/<user>                                                  -> JSON report
//   POST /v1/calibration/start                                               -> plan + target records
//   POST /v1/calibration/samples           body: calsample lines             -> ok record
//   POST /v1/calibration/finish                                              -> gazemap record
//   GET  /v1/calibration/map                                                 -> gazemap record
//   GET  /v1/health                                                          -> ok record
//
// Every request carries `Authorization: Bearer <token>` (the WebSocket upgrade
// may use `?token=` instead). Errors: HTTP status plus `error v=1 code=<Name>`.

#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "focusplus/service.hpp"

namespace focusplus::service {

struct HttpReply {
  int status = 200;
  std::string content_type = "text/plain";
  std::string body;
};

int http_status_for(ErrorCode code) noexcept;

/// Routing without sockets; `authorization` is the raw header value.
HttpReply handle_http(ServiceCore& core, const std::string& method, const std::string& target,
                      const std::string& authorization, const std::string& body);

/// Processes one WebSocket text frame for an authenticated client. Sessions that
/// received packets are added to `sessions` so the caller can mark them
/// disconnected when the channel closes.
std::string handle_stream_message(ServiceCore& core, const Principal& who, const std::string& text,
                                  std::vector<std::pair<std::string, std::string>>& sessions);

class Server {
 public:
  Server(ServiceCore& core, std::string address = "127.0.0.1", unsigned short port = 0, int threads = 2);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts serving on background threads.
  void start();
  void stop();
  unsigned short port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
};

/// Blocking HTTP/1.1 request (one connection per call).
HttpReply http_call(const std::string& host, unsigned short port, const std::string& method, const std::string& target,
                    const std::string& token, const std::string& body = {});

/// Blocking WebSocket client for /v1/stream.
class StreamClient {
 public:
  StreamClient(const std::string& host, unsigned short port, const std::string& token);
  ~StreamClient();
  StreamClient(const StreamClient&) = delete;
  StreamClient& operator=(const StreamClient&) = delete;

  void send(const std::string& text);
  std::string receive();
  /// send() followed by receive().
  std::string exchange(const std::string& text) {
    send(text);
    return receive();
  }
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace focusplus::service

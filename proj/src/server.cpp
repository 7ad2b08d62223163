#include "focusplus/server.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <sstream>

#include "focusplus/error.hpp"
#include "focusplus/records.hpp"

namespace focusplus::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Unauthorized: return 403;
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownClass: return 404;
    case ErrorCode::OutOfOrderPacket: return 409;
    case ErrorCode::InsufficientCalibration:
    case ErrorCode::DegenerateGeometry: return 422;
    case ErrorCode::IoError:
    case ErrorCode::NonConvergence: return 500;
    default: return 400;
  }
}

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t b = 0;
  while (b < path.size()) {
    if (path[b] == '/') {
      ++b;
      continue;
    }
    const std::size_t e = path.find('/', b);
    parts.push_back(path.substr(b, e == std::string::npos ? std::string::npos : e - b));
    if (e == std::string::npos) break;
    b = e;
  }
  return parts;
}

std::string query_param(const std::string& target, const std::string& key) {
  const std::size_t q = target.find('?');
  if (q == std::string::npos) return {};
  std::size_t b = q + 1;
  while (b < target.size()) {
    std::size_t e = target.find('&', b);
    if (e == std::string::npos) e = target.size();
    const std::size_t eq = target.find('=', b);
    if (eq != std::string::npos && eq < e && target.compare(b, eq - b, key) == 0 && eq - b == key.size()) {
      return target.substr(eq + 1, e - eq - 1);
    }
    b = e + 1;
  }
  return {};
}

std::string bearer(const std::string& authorization) {
  constexpr std::string_view prefix = "Bearer ";
  if (authorization.rfind(prefix, 0) != 0) return {};
  return authorization.substr(prefix.size());
}

std::vector<std::string_view> lines_of(const std::string& text) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  while (b < text.size()) {
    std::size_t e = text.find('\n', b);
    if (e == std::string::npos) e = text.size();
    std::string_view l(text.data() + b, e - b);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!l.empty()) out.push_back(l);
    b = e + 1;
  }
  return out;
}

HttpReply error_reply(const Error& e) {
  return {http_status_for(e.code()), "text/plain", serialize_error(e.code()) + "\n"};
}

HttpReply route(ServiceCore& core, const std::string& method, const std::string& target, const Principal& who,
                const std::string& body) {
  const std::string path = target.substr(0, target.find('?'));
  const auto parts = split_path(path);
  auto is = [&](std::initializer_list<std::string_view> expect) {
    if (parts.size() != expect.size()) return false;
    std::size_t i = 0;
    for (auto e : expect) {
      if (e != "*" && parts[i] != e) return false;
      ++i;
    }
    return true;
  };
  const bool get = method == "GET", post = method == "POST";

  if (get && is({"v1", "health"})) return {200, "text/plain", "ok v=1\n"};
  if (post && is({"v1", "sessions"})) {
    const auto lines = lines_of(body);
    if (lines.size() != 1) throw Error(ErrorCode::SchemaViolation, "expected one meta record");
    const SessionMeta meta = parse_meta(lines.front());
    core.register_session(who, meta);
    return {200, "text/plain", "ok v=1 session=" + meta.session_id + "\n"};
  }
  if (post && is({"v1", "packets"})) {
    std::vector<std::pair<std::string, std::string>> sessions;
    return {200, "text/plain", handle_stream_message(core, who, body, sessions)};
  }
  if (get && is({"v1", "classes", "*", "dashboard"})) {
    return {200, "application/json", snapshot_json(core.dashboard_snapshot(who, parts[2]))};
  }
  if (get && is({"v1", "logs", "*", "*"})) {
    std::ostringstream out;
    write_session_record(out, core.fetch_focus_log(who, parts[2], parts[3]));
    return {200, "text/plain", out.str()};
  }
  if (post && is({"v1", "sessions", "*", "survey"})) {
    const auto lines = lines_of(body);
    if (lines.size() != 1) throw Error(ErrorCode::SchemaViolation, "expected one survey record");
    const auto rec = RecordLine::parse(lines.front());
    if (rec.tag != "survey") throw Error(ErrorCode::SchemaViolation, "expected a survey record");
    auto opt = [&](const char* k) -> std::optional<int> {
      if (!rec.has(k)) return std::nullopt;
      return static_cast<int>(parse_int(rec.at(k)));
    };
    core.submit_survey(who, parts[2], opt("quiz"), opt("distraction"), opt("accuracy"));
    return {200, "text/plain", "ok v=1 session=" + parts[2] + "\n"};
  }
  if (get && is({"v1", "reports", "*"})) {
    return {200, "application/json", stats::report_json(core.report(who, parts[2]))};
  }
  if (post && is({"v1", "calibration", "start"})) return {200, "text/plain", serialize_plan(core.start_calibration(who))};
  if (post && is({"v1", "calibration", "samples"})) {
    std::vector<calibration::CalibrationSample> samples;
    for (auto l : lines_of(body)) samples.push_back(parse_calibration_sample(l));
    core.add_calibration_samples(who, samples);
    return {200, "text/plain", "ok v=1 samples=" + std::to_string(samples.size()) + "\n"};
  }
  if (post && is({"v1", "calibration", "finish"})) {
    std::ostringstream out;
    calibration::write_gaze_map(core.finish_calibration(who), out);
    return {200, "text/plain", out.str()};
  }
  if (get && is({"v1", "calibration", "map"})) {
    const auto map = core.gaze_map(who.user_id);
    if (!map) return {404, "text/plain", serialize_error(ErrorCode::UnknownSession) + "\n"};
    std::ostringstream out;
    calibration::write_gaze_map(*map, out);
    return {200, "text/plain", out.str()};
  }
  return {404, "text/plain", "error v=1 code=NotFound\n"};
}

}  // namespace

HttpReply handle_http(ServiceCore& core, const std::string& method, const std::string& target,
                      const std::string& authorization, const std::string& body) {
  try {
    const Principal& who = core.authenticate(bearer(authorization));
    return route(core, method, target, who, body);
  } catch (const Error& e) {
    return error_reply(e);
  } catch (const std::exception&) {
    return {500, "text/plain", serialize_error(ErrorCode::IoError) + "\n"};
  }
}

std::string handle_stream_message(ServiceCore& core, const Principal& who, const std::string& text,
                                  std::vector<std::pair<std::string, std::string>>& sessions) {
  std::string reply;
  for (auto line : lines_of(text)) {
    std::optional<std::int64_t> t;
    try {
      if (line.rfind("pkt ", 0) == 0) {
        // tie errors to the packet whenever its timestamp is readable
        try {
          const auto rec = RecordLine::parse(line);
          if (rec.has("t")) t = parse_int(rec.at("t"));
        } catch (const Error&) {
        }
        const MetricPacket p = parse_packet(line);
        t = p.timestamp_ms;
        reply += serialize_ack(core.ingest(who, p));
        const auto key = std::make_pair(p.user_id, p.session_id);
        if (std::find(sessions.begin(), sessions.end(), key) == sessions.end()) sessions.push_back(key);
      } else if (line.rfind("meta ", 0) == 0) {
        const SessionMeta meta = parse_meta(line);
        core.register_session(who, meta);
        reply += "ok v=1 session=" + meta.session_id;
      } else {
        throw Error(ErrorCode::SchemaViolation, "unexpected record");
      }
    } catch (const Error& e) {
      reply += serialize_error(e.code(), t);
    }
    reply += '\n';
  }
  return reply;
}

// ---------------------------------------------------------------------------
// Server

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, ServiceCore& core, Principal who)
      : ws_(std::move(socket)), core_(core), who_(std::move(who)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (!ec) do_read();
  }
  void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }
  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      for (const auto& [user, session] : sessions_) core_.disconnect(user, session);
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    queue_.push_back(handle_stream_message(core_, who_, text, sessions_));
    if (queue_.size() == 1) do_write();
    do_read();
  }
  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }
  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  ServiceCore& core_;
  Principal who_;
  std::deque<std::string> queue_;
  std::vector<std::pair<std::string, std::string>> sessions_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, ServiceCore& core) : stream_(std::move(socket)), core_(core) {}
  void run() { net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this())); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }
  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    const std::string authorization(req_[http::field::authorization]);
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      std::string token = bearer(authorization);
      if (token.empty()) token = query_param(target, "token");
      try {
        const Principal who = core_.authenticate(token);
        if (target.substr(0, target.find('?')) != "/v1/stream") throw Error(ErrorCode::InvalidArgument, "not a stream endpoint");
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), core_, who)->run(std::move(req_));
        return;
      } catch (const Error& e) {
        send(error_reply(e));
        return;
      }
    }
    send(handle_http(core_, std::string(req_.method_string()), target, authorization, req_.body()));
  }
  void send(const HttpReply& r) {
    res_ = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(r.status), req_.version());
    res_->set(http::field::server, "focusplus");
    res_->set(http::field::content_type, r.content_type);
    res_->keep_alive(req_.keep_alive());
    res_->body() = r.body;
    res_->prepare_payload();
    http::async_write(stream_, *res_,
                      beast::bind_front_handler(&HttpSession::on_write, shared_from_this(), res_->need_eof()));
  }
  void on_write(bool close, beast::error_code ec, std::size_t) {
    if (ec) return;
    if (close) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    res_.reset();
    do_read();
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  ServiceCore& core_;
  http::request<http::string_body> req_;
  std::shared_ptr<http::response<http::string_body>> res_;
};

}  // namespace

struct Server::Impl {
  ServiceCore& core;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  int thread_count;
  tcp::endpoint endpoint;

  Impl(ServiceCore& c, int n) : core(c), ioc(n), thread_count(n) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), core)->run();
      }
      do_accept();
    });
  }
};

Server::Server(ServiceCore& core, std::string address, unsigned short port, int threads)
    : impl_(std::make_unique<Impl>(core, std::max(threads, 1))) {
  impl_->endpoint = tcp::endpoint(net::ip::make_address(address), port);
}

Server::~Server() { stop(); }

void Server::start() {
  auto& a = impl_->acceptor;
  a.open(impl_->endpoint.protocol());
  a.set_option(net::socket_base::reuse_address(true));
  a.bind(impl_->endpoint);
  a.listen(net::socket_base::max_listen_connections);
  port_ = a.local_endpoint().port();
  impl_->do_accept();
  for (int i = 0; i < impl_->thread_count; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void Server::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->threads.clear();
  beast::error_code ec;
  impl_->acceptor.close(ec);
}

// ---------------------------------------------------------------------------
// Clients

HttpReply http_call(const std::string& host, unsigned short port, const std::string& method, const std::string& target,
                    const std::string& token, const std::string& body) {
  net::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve(host, std::to_string(port)));
  http::request<http::string_body> req{http::string_to_verb(method), target, 11};
  req.set(http::field::host, host);
  if (!token.empty()) req.set(http::field::authorization, "Bearer " + token);
  req.body() = body;
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {static_cast<int>(res.result_int()), std::string(res[http::field::content_type]), res.body()};
}

struct StreamClient::Impl {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};
  beast::flat_buffer buffer;
};

StreamClient::StreamClient(const std::string& host, unsigned short port, const std::string& token)
    : impl_(std::make_unique<Impl>()) {
  tcp::resolver resolver(impl_->ioc);
  net::connect(impl_->ws.next_layer(), resolver.resolve(host, std::to_string(port)));
  impl_->ws.set_option(websocket::stream_base::decorator(
      [token](websocket::request_type& req) { req.set(http::field::authorization, "Bearer " + token); }));
  impl_->ws.handshake(host + ":" + std::to_string(port), "/v1/stream");
  impl_->ws.text(true);
}

StreamClient::~StreamClient() {
  try {
    close();
  } catch (...) {
  }
}

void StreamClient::send(const std::string& text) { impl_->ws.write(net::buffer(text)); }

std::string StreamClient::receive() {
  impl_->buffer.clear();
  impl_->ws.read(impl_->buffer);
  return beast::buffers_to_string(impl_->buffer.data());
}

void StreamClient::close() {
  if (impl_ && impl_->ws.is_open()) impl_->ws.close(websocket::close_code::normal);
}

}  // namespace focusplus::service

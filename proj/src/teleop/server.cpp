#include "ifaware/teleop/server.hpp"

#include <atomic>
#include <deque>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace ifaware::teleop {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

void log_error(const char* what, beast::error_code ec) {
  if (ec == net::error::operation_aborted || ec == websocket::error::closed || ec == http::error::end_of_stream) {
    return;
  }
  std::cerr << "teleop-server: " << what << ": " << ec.message() << '\n';
}

std::string mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

class WebSocketSession : public std::enable_shared_from_this<WebSocketSession> {
 public:
  WebSocketSession(tcp::socket&& socket, SessionManager& sessions, std::string session_id)
      : ws_(std::move(socket)), sessions_(sessions), session_id_(std::move(session_id)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WebSocketSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return log_error("ws accept", ec);
    std::weak_ptr<WebSocketSession> weak = shared_from_this();
    try {
      token_ = sessions_.subscribe(session_id_, [weak](const std::string& msg) {
        if (auto self = weak.lock()) {
          net::post(self->ws_.get_executor(), [self, msg] { self->send(msg); });
        }
      });
      subscribed_ = true;
    } catch (const ServiceError& e) {
      send(nlohmann::json{{"type", "error"}, {"error", e.code()}, {"message", e.what()}}.dump());
      return;
    }
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WebSocketSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      if (subscribed_) sessions_.unsubscribe(session_id_, token_);
      return log_error("ws read", ec);
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle_message(text);
    do_read();
  }

  void handle_message(const std::string& text) {
    try {
      const auto msg = nlohmann::json::parse(text);
      if (msg.value("type", std::string()) != "action") throw bad_request("expected an action message");
      const auto phi = msg.at("phi").get<InterfaceAction>();
      std::optional<double> ts;
      if (msg.contains("ts") && msg.at("ts").is_number()) ts = msg.at("ts").get<double>();
      sessions_.submit_action(session_id_, phi, ts);
    } catch (const ServiceError& e) {
      send(nlohmann::json{{"type", "error"}, {"error", e.code()}, {"message", e.what()}}.dump());
    } catch (const std::exception& e) {
      send(nlohmann::json{{"type", "error"}, {"error", "bad_request"}, {"message", e.what()}}.dump());
    }
  }

  void send(std::string msg) {
    queue_.push_back(std::move(msg));
    if (queue_.size() > 1) return;
    do_write();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&WebSocketSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return log_error("ws write", ec);
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  SessionManager& sessions_;
  std::string session_id_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::uint64_t token_ = 0;
  bool subscribed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, SessionManager& sessions, const std::optional<std::filesystem::path>& static_dir)
      : stream_(std::move(socket)), sessions_(sessions), static_dir_(static_dir) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

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
    if (ec) return log_error("http read", ec);

    static const std::regex kWs(R"(^/sessions/([^/?]+)/ws(\?.*)?$)");
    std::smatch m;
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_) && std::regex_match(target, m, kWs)) {
      stream_.expires_never();
      std::make_shared<WebSocketSession>(stream_.release_socket(), sessions_, m[1].str())->run(std::move(req_));
      return;
    }
    write(respond());
  }

  http::response<http::string_body> respond() {
    http::response<http::string_body> res;
    res.version(req_.version());
    res.keep_alive(req_.keep_alive());
    res.set(http::field::server, "ifaware-teleop");
    res.set(http::field::access_control_allow_origin, "*");
    if (req_.method() == http::verb::options) {
      res.result(http::status::no_content);
      res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type");
      return res;
    }
    const std::string target(req_.target());
    if (req_.method() == http::verb::get && static_dir_ && target.rfind("/sessions", 0) != 0 &&
        target.rfind("/profiles", 0) != 0) {
      return serve_static(std::move(res), target);
    }
    const HttpReply reply =
        handle_http(sessions_, std::string(req_.method_string()), target, req_.body());
    res.result(static_cast<http::status>(reply.status));
    res.set(http::field::content_type, reply.content_type);
    res.body() = reply.body;
    res.prepare_payload();
    return res;
  }

  http::response<http::string_body> serve_static(http::response<http::string_body> res, std::string target) {
    target = target.substr(0, target.find('?'));
    if (target == "/") target = "/index.html";
    const auto path = *static_dir_ / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (target.find("..") != std::string::npos || !in) {
      res.result(http::status::not_found);
      res.set(http::field::content_type, "application/json");
      res.body() = nlohmann::json{{"error", "not_found"}, {"message", target}}.dump();
    } else {
      std::ostringstream os;
      os << in.rdbuf();
      res.result(http::status::ok);
      res.set(http::field::content_type, mime_type(path));
      res.body() = os.str();
    }
    res.prepare_payload();
    return res;
  }

  void write(http::response<http::string_body> res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return log_error("http write", ec);
      if (!sp->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  SessionManager& sessions_;
  const std::optional<std::filesystem::path>& static_dir_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct TeleopServer::Impl {
  Impl(ServerOptions o, Clock clock)
      : opts(std::move(o)), sessions(opts.data_dir, std::move(clock)), acceptor(ioc), timer(ioc) {}

  void listen() {
    const tcp::endpoint ep(net::ip::make_address(opts.address), opts.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(net::socket_base::max_listen_connections);
    do_accept();
    schedule_tick();
  }

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        log_error("accept", ec);
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), sessions, opts.static_dir)->run();
      }
      do_accept();
    });
  }

  void schedule_tick() {
    timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(opts.tick_interval_s)));
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      sessions.tick();
      schedule_tick();
    });
  }

  ServerOptions opts;
  SessionManager sessions;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer timer;
  std::vector<std::thread> workers;
  std::atomic<bool> started{false};
};

TeleopServer::TeleopServer(ServerOptions opts, Clock clock)
    : impl_(std::make_unique<Impl>(std::move(opts), std::move(clock))) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  if (impl_->started.exchange(true)) return;
  impl_->listen();
  const unsigned n = std::max(1u, impl_->opts.threads);
  for (unsigned i = 0; i < n; ++i) impl_->workers.emplace_back([this] { impl_->ioc.run(); });
}

void TeleopServer::run() {
  start();
  for (auto& t : impl_->workers) {
    if (t.joinable()) t.join();
  }
}

void TeleopServer::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  for (auto& t : impl_->workers) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  impl_->workers.clear();
}

unsigned short TeleopServer::port() const { return impl_->acceptor.local_endpoint().port(); }

SessionManager& TeleopServer::sessions() { return impl_->sessions; }

}  // namespace ifaware::teleop

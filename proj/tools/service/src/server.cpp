#include "cpsec/service/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <map>
#include <nlohmann/json.hpp>
#include <thread>

namespace cpsec::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class EventSocket;

struct Hub {
  std::mutex mutex;
  std::multimap<std::string, std::weak_ptr<EventSocket>> subscribers;

  void subscribe(const std::string& session, std::weak_ptr<EventSocket> socket) {
    std::lock_guard lock(mutex);
    subscribers.emplace(session, std::move(socket));
  }
  void publish(const std::string& session, const std::string& message);
};

class EventSocket : public std::enable_shared_from_this<EventSocket> {
 public:
  EventSocket(tcp::socket&& socket, Hub& hub, std::string session)
      : ws_(std::move(socket)), hub_(hub), session_(std::move(session)) {}

  void run(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->hub_.subscribe(self->session_, self->weak_from_this());
      self->read();
    });
  }

  void send(std::string message) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), message = std::move(message)]() mutable {
      self->queue_.push_back(std::move(message));
      if (self->queue_.size() == 1) self->write();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;  // closed; the hub drops the expired pointer
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  std::string session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
};

void Hub::publish(const std::string& session, const std::string& message) {
  std::vector<std::shared_ptr<EventSocket>> targets;
  {
    std::lock_guard lock(mutex);
    auto [first, last] = subscribers.equal_range(session);
    for (auto it = first; it != last;) {
      if (auto socket = it->second.lock()) {
        targets.push_back(std::move(socket));
        ++it;
      } else {
        it = subscribers.erase(it);
      }
    }
  }
  for (auto& socket : targets) socket->send(message);
}

/// "/api/sessions/{sid}/events" -> sid
std::optional<std::string> events_session(std::string_view target) {
  auto [path, query] = split_target(target);
  constexpr std::string_view prefix = "/api/sessions/";
  constexpr std::string_view suffix = "/events";
  if (!path.starts_with(prefix) || !path.ends_with(suffix) || path.size() <= prefix.size() + suffix.size())
    return std::nullopt;
  std::string id = path.substr(prefix.size(), path.size() - prefix.size() - suffix.size());
  if (id.find('/') != std::string::npos) return std::nullopt;
  return id;
}

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, Api& api, Hub& hub, asio::thread_pool& workers)
      : stream_(std::move(socket)), api_(api), hub_(hub), workers_(workers) {}

  void run() {
    asio::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
  }

 private:
  void read() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, request_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;

    if (websocket::is_upgrade(request_)) {
      auto session = events_session(std::string_view(request_.target().data(), request_.target().size()));
      if (session && api_.has_session(*session)) {
        stream_.expires_never();
        std::make_shared<EventSocket>(stream_.release_socket(), hub_, *session)->run(std::move(request_));
        return;
      }
      respond({404, "application/json", R"({"error":{"type":"not_found","message":"no event stream here"}})"});
      return;
    }

    asio::post(workers_, [self = shared_from_this()] {
      const auto& req = self->request_;
      Response response =
          self->api_.handle(std::string_view(req.method_string().data(), req.method_string().size()),
                            std::string_view(req.target().data(), req.target().size()), req.body());
      asio::post(self->stream_.get_executor(),
                 [self, response = std::move(response)]() mutable { self->respond(std::move(response)); });
    });
  }

  void respond(Response response) {
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(response.status),
                                                                   request_.version());
    res->set(http::field::server, "cpsec");
    res->set(http::field::content_type, response.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(request_.keep_alive());
    res->body() = std::move(response.body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->need_eof()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  Api& api_;
  Hub& hub_;
  asio::thread_pool& workers_;
};

}  // namespace

struct Server::Impl {
  Impl(Api& api_ref, const std::string& address, std::uint16_t port, unsigned threads)
      : api(api_ref), acceptor(ioc), workers(std::max(1u, threads)), io_threads(std::max(1u, threads)) {
    tcp::endpoint endpoint(asio::ip::make_address(address), port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(asio::socket_base::max_listen_connections);
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == asio::error::operation_aborted) return;
      } else {
        std::make_shared<HttpConnection>(std::move(socket), api, hub, workers)->run();
      }
      accept();
    });
  }

  Api& api;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::thread_pool workers;
  unsigned io_threads;
  std::vector<std::thread> threads;
  Hub hub;
  bool started = false;
};

Server::Server(Api& api, const std::string& address, std::uint16_t port, unsigned threads)
    : impl_(std::make_unique<Impl>(api, address, port, threads)) {
  api.set_listener([hub = &impl_->hub](const std::string& session, const Invalidation& invalidated) {
    nlohmann::json event = {{"session", session}, {"invalidated", invalidated}};
    hub->publish(session, event.dump());
  });
}

Server::~Server() {
  stop();
  impl_->api.set_listener({});
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start() {
  if (impl_->started) return;
  impl_->started = true;
  impl_->accept();
  for (unsigned i = 0; i < impl_->io_threads; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void Server::run() {
  asio::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
  signals.async_wait([this](const beast::error_code&, int) { impl_->ioc.stop(); });
  start();
  for (auto& t : impl_->threads)
    if (t.joinable()) t.join();
}

void Server::stop() {
  impl_->ioc.stop();
  for (auto& t : impl_->threads)
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  impl_->threads.clear();
  impl_->workers.join();
  beast::error_code ec;
  impl_->acceptor.close(ec);
}

}  // namespace cpsec::service

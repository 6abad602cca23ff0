#include "backend/server.hpp"

#include <functional>

#include <httplib.h>

#include "core/errors.hpp"

namespace iiie::backend {

using nlohmann::json;

namespace {

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

}  // namespace

BackendServer::BackendServer(Backends backends, ServerOptions options)
    : backends_(std::move(backends)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  overload_left_ = options_.overload_first_n;

  using Handler = std::function<json(const json&)>;
  const auto route = [this](std::string_view path, Handler handler) {
    server_->Post(std::string(path), [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++served_;
      if (overload_left_.load() > 0 && overload_left_.fetch_sub(1) > 0) {
        reply_error(res, 503, "Overloaded", "try again later");
        return;
      }
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        reply_error(res, 400, "MalformedEnvelope", e.what());
        return;
      }
      try {
        res.set_content(handler(body).dump(), "application/json");
        res.status = 200;
      } catch (const Error& e) {
        const int status = e.code() == ErrorCode::BackendUnreachable ? 503 : 422;
        reply_error(res, status, std::string(to_string(e.code())), e.what());
      } catch (const std::exception& e) {
        reply_error(res, 500, "Internal", e.what());
      }
    });
  };

  if (backends_.chat) {
    route(kChatPath, [this](const json& j) { return to_json(backends_.chat->chat(chat_request_from_json(j))); });
  }
  if (backends_.ground) {
    route(kGroundPath,
          [this](const json& j) { return to_json(backends_.ground->ground(ground_request_from_json(j))); });
  }
  if (backends_.inpaint) {
    route(kInpaintPath,
          [this](const json& j) { return to_json(backends_.inpaint->inpaint(inpaint_request_from_json(j))); });
  }
  if (backends_.global_edit) {
    route(kGlobalEditPath, [this](const json& j) {
      return to_json(backends_.global_edit->global_edit(global_request_from_json(j)));
    });
  }
}

BackendServer::~BackendServer() { stop(); }

void BackendServer::start() {
  // Exclusive bind: a second listener on a taken port must fail.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::PortUnavailable,
                "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void BackendServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void BackendServer::wait() {
  if (thread_.joinable()) thread_.join();
}

std::string BackendServer::url() const {
  return "http://" + options_.host + ":" + std::to_string(port_);
}

MockServerSet::MockServerSet(MockSuite suite, int port_base, const std::string& host)
    : suite_(std::move(suite)) {
  const auto make = [&](Backends b, int offset) {
    auto server = std::make_unique<BackendServer>(std::move(b), ServerOptions{host, port_base == 0 ? 0 : port_base + offset, 0});
    server->start();
    return server;
  };
  chat_ = make(Backends{suite_.chat, nullptr, nullptr, nullptr}, 0);
  ground_ = make(Backends{nullptr, suite_.ground, nullptr, nullptr}, 1);
  inpaint_ = make(Backends{nullptr, nullptr, suite_.inpaint, nullptr}, 2);
  global_ = make(Backends{nullptr, nullptr, nullptr, suite_.global_edit}, 3);
}

BackendUrls MockServerSet::urls() const {
  return {chat_->url(), ground_->url(), inpaint_->url(), global_->url()};
}

void MockServerSet::stop() {
  for (auto* s : {chat_.get(), ground_.get(), inpaint_.get(), global_.get()}) {
    if (s) s->stop();
  }
}

void MockServerSet::wait() {
  for (auto* s : {chat_.get(), ground_.get(), inpaint_.get(), global_.get()}) {
    if (s) s->wait();
  }
}

}  // namespace iiie::backend

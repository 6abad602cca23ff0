#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "backend/protocol.hpp"

namespace iiie::backend {

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
};

class GroundBackend {
 public:
  virtual ~GroundBackend() = default;
  virtual GroundResponse ground(const GroundRequest& request) = 0;
};

class InpaintBackend {
 public:
  virtual ~InpaintBackend() = default;
  virtual ImageResponse inpaint(const InpaintRequest& request) = 0;
};

class GlobalEditBackend {
 public:
  virtual ~GlobalEditBackend() = default;
  virtual ImageResponse global_edit(const GlobalEditRequest& request) = 0;
};

// The four model backends a job talks to. Shared read-only between jobs.
struct Backends {
  std::shared_ptr<ChatBackend> chat;
  std::shared_ptr<GroundBackend> ground;
  std::shared_ptr<InpaintBackend> inpaint;
  std::shared_ptr<GlobalEditBackend> global_edit;
};

struct RetryPolicy {
  // Delays before retry 1..n; the number of entries is the retry count.
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(250),
                                                 std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(4000)};
  std::chrono::seconds connect_timeout{5};
  std::chrono::seconds read_timeout{300};

  int max_attempts() const { return static_cast<int>(backoff.size()) + 1; }
};

struct Endpoint {
  std::string host;
  int port = 0;
  std::string base_path;  // no trailing slash

  // Accepts http://host:port[/prefix]; throws ConfigError otherwise.
  static Endpoint parse(const std::string& url);
  std::string url() const;
};

// POSTs JSON envelopes. Transport failures and 503 are retried per policy and
// end in BackendUnreachable; 422 maps to BackendContractViolation; any other
// non-200 status is BackendRejected without retry.
class HttpTransport {
 public:
  HttpTransport(Endpoint endpoint, RetryPolicy policy);

  std::string post(std::string_view path, const std::string& body) const;
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Endpoint endpoint_;
  RetryPolicy policy_;
};

class HttpChatClient final : public ChatBackend {
 public:
  HttpChatClient(Endpoint endpoint, RetryPolicy policy) : transport_(std::move(endpoint), std::move(policy)) {}
  ChatResponse chat(const ChatRequest& request) override;

 private:
  HttpTransport transport_;
};

class HttpGroundClient final : public GroundBackend {
 public:
  HttpGroundClient(Endpoint endpoint, RetryPolicy policy) : transport_(std::move(endpoint), std::move(policy)) {}
  GroundResponse ground(const GroundRequest& request) override;

 private:
  HttpTransport transport_;
};

class HttpInpaintClient final : public InpaintBackend {
 public:
  HttpInpaintClient(Endpoint endpoint, RetryPolicy policy) : transport_(std::move(endpoint), std::move(policy)) {}
  ImageResponse inpaint(const InpaintRequest& request) override;

 private:
  HttpTransport transport_;
};

class HttpGlobalEditClient final : public GlobalEditBackend {
 public:
  HttpGlobalEditClient(Endpoint endpoint, RetryPolicy policy) : transport_(std::move(endpoint), std::move(policy)) {}
  ImageResponse global_edit(const GlobalEditRequest& request) override;

 private:
  HttpTransport transport_;
};

struct BackendUrls {
  std::string chat;
  std::string ground;
  std::string inpaint;
  std::string global_edit;
};

Backends make_http_backends(const BackendUrls& urls, const RetryPolicy& policy);

}  // namespace iiie::backend

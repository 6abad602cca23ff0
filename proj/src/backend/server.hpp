#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "backend/client.hpp"
#include "backend/mocks.hpp"

namespace httplib {
class Server;
}

namespace iiie::backend {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  // Answer 503 to the first N requests; exercises client retry.
  int overload_first_n = 0;
};

// Serves whichever of the four protocol endpoints have a backend attached.
// Envelope decode errors answer 400, contract errors 422.
class BackendServer {
 public:
  BackendServer(Backends backends, ServerOptions options);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  // Throws PortUnavailable when the port cannot be bound.
  void start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

  int port() const { return port_; }
  std::string url() const;
  std::size_t requests_served() const { return served_.load(); }

 private:
  Backends backends_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> served_{0};
  std::atomic<int> overload_left_{0};
};

// The four mocks on consecutive ports: chat, ground, inpaint, global-edit.
// port_base 0 picks free ports.
class MockServerSet {
 public:
  MockServerSet(MockSuite suite, int port_base, const std::string& host = "127.0.0.1");

  const MockSuite& suite() const { return suite_; }
  BackendUrls urls() const;
  void stop();
  void wait();

 private:
  MockSuite suite_;
  std::unique_ptr<BackendServer> chat_;
  std::unique_ptr<BackendServer> ground_;
  std::unique_ptr<BackendServer> inpaint_;
  std::unique_ptr<BackendServer> global_;
};

}  // namespace iiie::backend

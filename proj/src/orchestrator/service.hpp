#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "orchestrator/pipeline.hpp"

namespace httplib {
class Server;
}

namespace iiie::orchestrator {

// Job states backed by an append-only JSONL log. Each line is either
// {"state": JobState} or {"deleted": id}; the last line per id wins.
class JobRegistry {
 public:
  explicit JobRegistry(std::string log_path);

  // Replays the log. Jobs caught mid-pipeline are marked Failed; the ids of
  // jobs still Queued are returned in submission order.
  std::vector<std::string> recover();

  void put(const JobState& state);
  void erase(const std::string& id);
  std::optional<JobState> get(const std::string& id) const;
  std::vector<JobState> list() const;

 private:
  void append(const nlohmann::json& line);

  std::string log_path_;
  mutable std::mutex mu_;
  std::map<std::string, JobState> jobs_;
  std::vector<std::string> order_;
};

struct ServiceOptions {
  std::string out_dir = "out";
  int workers = 2;
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
};

enum class CancelResult { Cancelled, NotQueued, Unknown };

// Job queue, worker pool and the /v1/edits HTTP API. Inputs are stored under
// out_dir/<id>/input/ so queued jobs survive a restart.
class EditService {
 public:
  EditService(std::shared_ptr<const Engine> engine, ServiceOptions options);
  ~EditService();
  EditService(const EditService&) = delete;
  EditService& operator=(const EditService&) = delete;

  // Recovers the registry, starts the workers and binds the HTTP listener.
  // Throws PortUnavailable.
  void start();
  void stop();
  void wait();
  int port() const { return port_; }

  // Throws MalformedImage or PreconditionViolation/InvalidPlan for inputs the
  // API answers with 400.
  std::string submit(const Bytes& image_bytes, const std::string& instruction, const std::optional<PlanOverride>& ov,
                     std::optional<std::int64_t> seed);
  std::optional<JobState> status(const std::string& id) const { return registry_.get(id); }
  CancelResult cancel(const std::string& id);
  // True when the job reached Done or Failed within `timeout`.
  bool wait_terminal(const std::string& id, std::chrono::milliseconds timeout) const;

  std::string job_dir(const std::string& id) const;

 private:
  void install_routes();
  void worker_loop(std::stop_token stop);
  void execute(const std::string& id);
  std::string new_id();

  std::shared_ptr<const Engine> engine_;
  ServiceOptions options_;
  JobRegistry registry_;
  std::unique_ptr<httplib::Server> server_;
  std::thread http_thread_;
  int port_ = 0;

  mutable std::mutex mu_;
  std::condition_variable_any queue_cv_;
  mutable std::condition_variable_any done_cv_;
  std::deque<std::string> queue_;
  std::vector<std::jthread> workers_;
  bool started_ = false;
};

}  // namespace iiie::orchestrator

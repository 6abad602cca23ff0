#include "orchestrator/service.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include <httplib.h>

#include "core/errors.hpp"

namespace iiie::orchestrator {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kRegistryFile = "registry.jsonl";
constexpr const char* kIdPattern = "([A-Za-z0-9_-]+)";

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

int submit_status(ErrorCode code) { return code == ErrorCode::OversizedImage ? 413 : 400; }

std::string content_type_for(const std::string& name) {
  const std::string ext = fs::path(name).extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

json api_view(const JobState& state) {
  json j = to_json(state);
  json artifacts = json::object();
  for (const auto& [name, path] : state.artifacts) {
    (void)path;
    artifacts[name] = "/v1/edits/" + state.id + "/artifacts/" + name;
  }
  j["artifacts"] = artifacts;
  return j;
}

}  // namespace

JobRegistry::JobRegistry(std::string log_path) : log_path_(std::move(log_path)) {}

void JobRegistry::append(const json& line) {
  std::ofstream out(log_path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + log_path_);
  out << line.dump() << '\n';
  out.flush();
}

std::vector<std::string> JobRegistry::recover() {
  std::lock_guard lock(mu_);
  jobs_.clear();
  order_.clear();
  std::ifstream in(log_path_, std::ios::binary);
  std::string line;
  while (in && std::getline(in, line)) {
    json j;
    try {
      j = json::parse(line);
      if (j.contains("deleted")) {
        const auto id = j.at("deleted").get<std::string>();
        jobs_.erase(id);
        std::erase(order_, id);
      } else {
        JobState s = job_state_from_json(j.at("state"));
        if (!jobs_.count(s.id)) order_.push_back(s.id);
        jobs_[s.id] = std::move(s);
      }
    } catch (const std::exception&) {
      // a torn final line from a crash; everything before it stands
    }
  }

  std::vector<std::string> queued;
  for (const auto& id : order_) {
    JobState& s = jobs_.at(id);
    if (s.phase == JobPhase::Queued) {
      queued.push_back(id);
    } else if (!s.terminal()) {
      s.fail(ErrorCode::BackendUnreachable, "interrupted by service restart during " + std::string(to_string(s.phase)));
      append(json{{"state", to_json(s)}});
    }
  }
  return queued;
}

void JobRegistry::put(const JobState& state) {
  std::lock_guard lock(mu_);
  if (!jobs_.count(state.id)) order_.push_back(state.id);
  jobs_[state.id] = state;
  append(json{{"state", to_json(state)}});
}

void JobRegistry::erase(const std::string& id) {
  std::lock_guard lock(mu_);
  jobs_.erase(id);
  std::erase(order_, id);
  append(json{{"deleted", id}});
}

std::optional<JobState> JobRegistry::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::vector<JobState> JobRegistry::list() const {
  std::lock_guard lock(mu_);
  std::vector<JobState> out;
  for (const auto& id : order_) out.push_back(jobs_.at(id));
  return out;
}

EditService::EditService(std::shared_ptr<const Engine> engine, ServiceOptions options)
    : engine_(std::move(engine)),
      options_(std::move(options)),
      registry_((fs::path(options_.out_dir) / kRegistryFile).string()),
      server_(std::make_unique<httplib::Server>()) {
  if (options_.workers < 1) throw Error(ErrorCode::ConfigError, "service needs at least one worker");
  install_routes();
}

EditService::~EditService() { stop(); }

std::string EditService::job_dir(const std::string& id) const { return (fs::path(options_.out_dir) / id).string(); }

std::string EditService::new_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[24];
  std::snprintf(buf, sizeof buf, "e%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

void EditService::start() {
  {
    std::lock_guard lock(mu_);
    if (started_) return;
    started_ = true;
  }
  fs::create_directories(options_.out_dir);
  const auto queued = registry_.recover();
  {
    std::lock_guard lock(mu_);
    queue_.insert(queue_.end(), queued.begin(), queued.end());
  }
  for (int i = 0; i < options_.workers; ++i) {
    workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
  }
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
    stop();
    throw Error(ErrorCode::PortUnavailable, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  http_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void EditService::stop() {
  if (server_) server_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  for (auto& w : workers_) w.request_stop();
  queue_cv_.notify_all();
  workers_.clear();
}

void EditService::wait() {
  if (http_thread_.joinable()) http_thread_.join();
}

std::string EditService::submit(const Bytes& image_bytes, const std::string& instruction,
                                const std::optional<PlanOverride>& ov, std::optional<std::int64_t> seed) {
  const ImageBuffer image = decode_image(image_bytes);
  const std::string text = normalized_instruction(instruction);
  if (ov) check_override(*ov);

  std::string id;
  do {
    id = new_id();
  } while (registry_.get(id));
  const fs::path input = fs::path(job_dir(id)) / "input";
  fs::create_directories(input);
  write_file_atomic((input / "source.png").string(), encode_image(image));
  json request{{"instruction", text}, {"override", ov ? to_json(*ov) : json(nullptr)}};
  request["seed"] = seed ? json(*seed) : json(nullptr);
  if (ov && ov->user_mask) {
    write_file_atomic((input / "override_mask.png").string(), encode_mask(*ov->user_mask));
    request["override_mask"] = "override_mask.png";
  }
  write_file_atomic((input / "request.json").string(), request.dump(2) + "\n");

  JobState state;
  state.id = id;
  state.timestamps["Queued"] = utc_timestamp();
  registry_.put(state);
  {
    std::lock_guard lock(mu_);
    queue_.push_back(id);
  }
  queue_cv_.notify_one();
  return id;
}

CancelResult EditService::cancel(const std::string& id) {
  {
    std::lock_guard lock(mu_);
    const auto it = std::find(queue_.begin(), queue_.end(), id);
    if (it != queue_.end()) {
      queue_.erase(it);
      registry_.erase(id);
      done_cv_.notify_all();
      return CancelResult::Cancelled;
    }
  }
  return registry_.get(id) ? CancelResult::NotQueued : CancelResult::Unknown;
}

bool EditService::wait_terminal(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return done_cv_.wait_for(lock, timeout, [&] {
    const auto s = registry_.get(id);
    return s && s->terminal();
  });
}

void EditService::worker_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      if (!queue_cv_.wait(lock, stop, [this] { return !queue_.empty(); })) return;
      id = queue_.front();
      queue_.pop_front();
    }
    execute(id);
  }
}

void EditService::execute(const std::string& id) {
  const std::optional<JobState> queued = registry_.get(id);
  const std::string queued_at = queued ? queued->timestamps.count("Queued") ? queued->timestamps.at("Queued") : "" : "";
  const auto publish = [&](const JobState& s) {
    JobState copy = s;
    if (!queued_at.empty()) copy.timestamps["Queued"] = queued_at;
    registry_.put(copy);
    std::lock_guard lock(mu_);
    done_cv_.notify_all();
  };

  const fs::path input_dir = fs::path(job_dir(id)) / "input";
  JobInput input;
  input.request.id = id;
  try {
    std::ifstream in(input_dir / "request.json");
    const json request = json::parse(in);
    input.request.instruction = request.at("instruction").get<std::string>();
    input.request.image = decode_image(read_file((input_dir / "source.png").string()));
    if (!request.at("override").is_null()) input.override_plan = override_from_json(request.at("override"), "");
    if (request.contains("override_mask")) {
      if (!input.override_plan) input.override_plan = PlanOverride{};
      input.override_plan->user_mask = decode_mask(read_file((input_dir / "override_mask.png").string()));
    }
    if (request.contains("seed") && !request.at("seed").is_null()) input.seed = request.at("seed").get<std::int64_t>();
  } catch (const std::exception& e) {
    JobState s = queued.value_or(JobState{});
    s.id = id;
    s.fail(ErrorCode::MalformedImage, std::string("stored job input unreadable: ") + e.what());
    publish(s);
    return;
  }
  engine_->run(input, job_dir(id), publish);
}

void EditService::install_routes() {
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server_->set_payload_max_length(256ull << 20);
  server_->Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  server_->Post("/v1/edits", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("image") || !req.has_file("instruction")) {
      reply_error(res, 400, "BadRequest", "multipart fields 'image' and 'instruction' are required");
      return;
    }
    const auto& image = req.get_file_value("image").content;
    std::optional<PlanOverride> ov;
    std::optional<std::int64_t> seed;
    try {
      if (req.has_file("override") && !trim(req.get_file_value("override").content).empty()) {
        json j;
        try {
          j = json::parse(req.get_file_value("override").content);
        } catch (const json::parse_error& e) {
          throw Error(ErrorCode::InvalidPlan, std::string("override is not JSON: ") + e.what());
        }
        if (j.contains("mask")) throw Error(ErrorCode::InvalidPlan, "send the override mask as the 'mask' part");
        ov = override_from_json(j, "");
      }
      if (req.has_file("mask")) {
        if (!ov) ov = PlanOverride{};
        const auto& mask = req.get_file_value("mask").content;
        try {
          ov->user_mask = decode_mask(Bytes(mask.begin(), mask.end()));
        } catch (const Error& e) {
          throw Error(ErrorCode::InvalidPlan, std::string("override mask: ") + e.what());
        }
      }
      if (req.has_file("seed")) {
        try {
          seed = std::stoll(req.get_file_value("seed").content);
        } catch (const std::exception&) {
          throw Error(ErrorCode::PreconditionViolation, "seed must be an integer");
        }
      }
      const std::string id = submit(Bytes(image.begin(), image.end()), req.get_file_value("instruction").content, ov, seed);
      res.status = 202;
      res.set_content(json{{"id", id}}.dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, submit_status(e.code()), to_string(e.code()), e.what());
    }
  });

  server_->Get("/v1/edits", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& s : registry_.list()) out.push_back({{"id", s.id}, {"phase", to_string(s.phase)}});
    res.set_content(out.dump(), "application/json");
  });

  server_->Get(std::string("/v1/edits/") + kIdPattern, [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = registry_.get(req.matches[1]);
    if (!s) return reply_error(res, 404, "NotFound", "no job " + std::string(req.matches[1]));
    res.set_content(api_view(*s).dump(), "application/json");
  });

  server_->Get(std::string("/v1/edits/") + kIdPattern + "/artifacts/(.+)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const auto s = registry_.get(req.matches[1]);
                 if (!s) return reply_error(res, 404, "NotFound", "no job " + std::string(req.matches[1]));
                 const auto it = s->artifacts.find(req.matches[2]);
                 if (it == s->artifacts.end()) {
                   return reply_error(res, 404, "NotFound", "no artifact " + std::string(req.matches[2]));
                 }
                 try {
                   const Bytes bytes = read_file(it->second);
                   res.set_content(std::string(bytes.begin(), bytes.end()), content_type_for(it->first));
                 } catch (const Error& e) {
                   reply_error(res, 404, "NotFound", e.what());
                 }
               });

  server_->Delete(std::string("/v1/edits/") + kIdPattern, [this](const httplib::Request& req, httplib::Response& res) {
    switch (cancel(req.matches[1])) {
      case CancelResult::Cancelled:
        res.set_content(json{{"id", std::string(req.matches[1])}, {"cancelled", true}}.dump(), "application/json");
        return;
      case CancelResult::NotQueued:
        return reply_error(res, 409, "Conflict", "only queued jobs can be cancelled");
      case CancelResult::Unknown:
        return reply_error(res, 404, "NotFound", "no job " + std::string(req.matches[1]));
    }
  });
}

}  // namespace iiie::orchestrator

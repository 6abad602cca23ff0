#include "orchestrator/config.hpp"

#include <filesystem>
#include <fstream>

#include "core/errors.hpp"

namespace iiie::orchestrator {

using nlohmann::json;

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_relative() ? (std::filesystem::path(base_dir) / p).string() : path;
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config key '") + key + "': " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw Error(ErrorCode::ConfigError, std::string("config section '") + key + "' must be an object");
  return j.at(key);
}

}  // namespace

std::string_view to_string(FallbackPolicy policy) {
  switch (policy) {
    case FallbackPolicy::Never: return "never";
    case FallbackPolicy::OnBackendFailure: return "on_backend_failure";
    case FallbackPolicy::Always: return "always";
  }
  return "never";
}

void ServiceConfig::validate() const {
  if (backend_mode != "http" && backend_mode != "mock") {
    throw Error(ErrorCode::ConfigError, "backends.mode must be 'http' or 'mock'");
  }
  if (backend_mode == "http") {
    for (const auto* url : {&urls.chat, &urls.ground, &urls.inpaint, &urls.global_edit}) backend::Endpoint::parse(*url);
  }
  mask.validate();
  generation.validate();
  if (workers < 1) throw Error(ErrorCode::ConfigError, "service.workers must be >= 1");
  if (port < 0 || port > 65535) throw Error(ErrorCode::ConfigError, "service.port out of range");
  if (out_dir.empty()) throw Error(ErrorCode::ConfigError, "service.out_dir is empty");
}

ServiceConfig config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  ServiceConfig c;

  const json& b = section(j, "backends");
  read(b, "mode", c.backend_mode);
  read(b, "chat", c.urls.chat);
  read(b, "ground", c.urls.ground);
  read(b, "inpaint", c.urls.inpaint);
  read(b, "global_edit", c.urls.global_edit);
  read(b, "fixtures", c.mock_fixtures_dir);
  read(b, "rules", c.mock_rules_path);
  c.mock_fixtures_dir = resolve(c.mock_fixtures_dir, base_dir);
  c.mock_rules_path = resolve(c.mock_rules_path, base_dir);

  const json& r = section(j, "retry");
  if (r.contains("backoff_ms")) {
    std::vector<int> ms;
    read(r, "backoff_ms", ms);
    c.retry.backoff.clear();
    for (int v : ms) {
      if (v < 0) throw Error(ErrorCode::ConfigError, "retry.backoff_ms entries must be >= 0");
      c.retry.backoff.emplace_back(v);
    }
  }
  int connect_s = static_cast<int>(c.retry.connect_timeout.count());
  int read_s = static_cast<int>(c.retry.read_timeout.count());
  read(r, "connect_timeout_s", connect_s);
  read(r, "read_timeout_s", read_s);
  if (connect_s < 1 || read_s < 1) throw Error(ErrorCode::ConfigError, "retry timeouts must be >= 1 s");
  c.retry.connect_timeout = std::chrono::seconds(connect_s);
  c.retry.read_timeout = std::chrono::seconds(read_s);

  const json& m = section(j, "mask");
  read(m, "confidence_threshold", c.mask.confidence_threshold);
  if (m.contains("dilation_radius") && !m.at("dilation_radius").is_null()) {
    int radius = 0;
    read(m, "dilation_radius", radius);
    c.mask.dilation_radius = radius;
  }
  read(m, "addition_box_fraction", c.mask.addition_box_fraction);

  const json& g = section(j, "generation");
  read(g, "seed", c.generation.seed);
  read(g, "paste_back", c.generation.paste_back);
  read(g, "feather_radius", c.generation.feather_radius);

  const json& a = section(j, "analysis");
  read(a, "templates", c.templates_path);
  c.templates_path = resolve(c.templates_path, base_dir);
  std::string fallback = "never";
  read(a, "fallback", fallback);
  if (fallback == "never") {
    c.fallback = FallbackPolicy::Never;
  } else if (fallback == "on_backend_failure") {
    c.fallback = FallbackPolicy::OnBackendFailure;
  } else if (fallback == "always") {
    c.fallback = FallbackPolicy::Always;
  } else {
    throw Error(ErrorCode::ConfigError, "analysis.fallback must be never, on_backend_failure or always");
  }

  const json& s = section(j, "service");
  read(s, "workers", c.workers);
  read(s, "out_dir", c.out_dir);
  read(s, "host", c.host);
  read(s, "port", c.port);
  c.out_dir = resolve(c.out_dir, base_dir);

  c.validate();
  return c;
}

ServiceConfig load_config(const std::string& path) {
  if (path.empty()) return ServiceConfig{};
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, "config " + path + ": " + e.what());
  }
  return config_from_json(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace iiie::orchestrator

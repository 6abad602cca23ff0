#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "backend/client.hpp"
#include "generation/router.hpp"
#include "mask/mask_engine.hpp"

namespace iiie::orchestrator {

enum class FallbackPolicy { Never, OnBackendFailure, Always };

std::string_view to_string(FallbackPolicy policy);

struct ServiceConfig {
  // "http" talks to the four backend URLs; "mock" runs the deterministic
  // backends in process.
  std::string backend_mode = "http";
  backend::BackendUrls urls{"http://127.0.0.1:7801", "http://127.0.0.1:7802", "http://127.0.0.1:7803",
                            "http://127.0.0.1:7804"};
  std::string mock_fixtures_dir;  // mock mode: grounding fixtures
  std::string mock_rules_path;    // mock mode: chat rule table, builtin when empty

  backend::RetryPolicy retry;
  mask::MaskConfig mask;
  generation::GenerationConfig generation;

  std::string templates_path;  // builtin templates when empty
  FallbackPolicy fallback = FallbackPolicy::Never;

  int workers = 2;
  std::string out_dir = "out";
  std::string host = "127.0.0.1";
  int port = 8080;

  // Throws ConfigError.
  void validate() const;
};

// Relative paths inside the document resolve against `base_dir`.
ServiceConfig config_from_json(const nlohmann::json& j, const std::string& base_dir);
// An empty path yields the defaults.
ServiceConfig load_config(const std::string& path);

}  // namespace iiie::orchestrator

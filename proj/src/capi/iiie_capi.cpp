#include "iiie/iiie.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "backend/mocks.hpp"
#include "backend/server.hpp"
#include "core/digest.hpp"
#include "core/errors.hpp"
#include "eval/ratings.hpp"
#include "orchestrator/batch.hpp"
#include "orchestrator/config.hpp"
#include "orchestrator/pipeline.hpp"
#include "orchestrator/service.hpp"

using nlohmann::json;
namespace orch = iiie::orchestrator;

struct iiie_context {
  orch::ServiceConfig config;
  std::shared_ptr<const orch::Engine> engine;
};

struct iiie_service {
  std::unique_ptr<orch::EditService> service;
};

struct iiie_mock_backends {
  std::unique_ptr<iiie::backend::MockServerSet> servers;
};

namespace {

thread_local std::string g_last_error;

iiie_status status_of(iiie::ErrorCode code) { return static_cast<iiie_status>(static_cast<int>(code) + 1); }

iiie_status fail(iiie_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

template <typename Fn>
iiie_status guarded(Fn fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const iiie::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(IIIE_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(IIIE_INTERNAL, e.what());
  }
}

std::string default_job_id(const iiie::ImageBuffer& image, const std::string& instruction) {
  const auto h = iiie::sha256(std::string_view(instruction));
  return "edit-" + iiie::image_digest(image).substr(0, 8) + "-" + iiie::to_hex(h).substr(0, 8);
}

}  // namespace

extern "C" {

const char* iiie_status_name(iiie_status status) {
  switch (status) {
    case IIIE_OK: return "OK";
    case IIIE_INVALID_ARGUMENT: return "InvalidArgument";
    case IIIE_INTERNAL: return "Internal";
    default: break;
  }
  const int code = static_cast<int>(status) - 1;
  if (code >= 0 && code <= static_cast<int>(iiie::ErrorCode::IoError)) {
    return iiie::to_string(static_cast<iiie::ErrorCode>(code)).data();
  }
  return "Unknown";
}

const char* iiie_last_error(void) { return g_last_error.c_str(); }

void iiie_string_free(char* s) { std::free(s); }

iiie_status iiie_context_create(const char* config_path, iiie_context** out) {
  if (out == nullptr) return fail(IIIE_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto ctx = std::make_unique<iiie_context>();
    ctx->config = orch::load_config(config_path != nullptr ? config_path : "");
    ctx->engine = std::make_shared<const orch::Engine>(orch::Engine::from_config(ctx->config));
    *out = ctx.release();
    return IIIE_OK;
  });
}

iiie_status iiie_context_create_json(const char* config_json, const char* base_dir, iiie_context** out) {
  if (out == nullptr || config_json == nullptr) return fail(IIIE_INVALID_ARGUMENT, "config_json and out are required");
  *out = nullptr;
  return guarded([&] {
    json j;
    try {
      j = json::parse(config_json);
    } catch (const json::parse_error& e) {
      throw iiie::Error(iiie::ErrorCode::ConfigError, e.what());
    }
    auto ctx = std::make_unique<iiie_context>();
    ctx->config = orch::config_from_json(j, base_dir != nullptr ? base_dir : "");
    ctx->engine = std::make_shared<const orch::Engine>(orch::Engine::from_config(ctx->config));
    *out = ctx.release();
    return IIIE_OK;
  });
}

void iiie_context_destroy(iiie_context* ctx) { delete ctx; }

iiie_status iiie_edit(iiie_context* ctx, const char* image_path, const char* instruction, const char* override_path,
                      const int64_t* seed, const char* out_dir, const char* job_id, char** job_json) {
  if (job_json != nullptr) *job_json = nullptr;
  if (ctx == nullptr || image_path == nullptr || instruction == nullptr) {
    return fail(IIIE_INVALID_ARGUMENT, "context, image_path and instruction are required");
  }
  return guarded([&] {
    orch::JobInput input;
    input.request.instruction = instruction;
    if (seed != nullptr) input.seed = *seed;
    if (override_path != nullptr) input.override_plan = orch::load_override(override_path);
    const iiie::Bytes bytes = iiie::read_file(image_path);

    orch::JobState state;
    std::string dir_root = out_dir != nullptr ? out_dir : ctx->config.out_dir;
    try {
      input.request.image = iiie::decode_image(bytes);
      input.request.id = job_id != nullptr ? job_id : default_job_id(input.request.image, instruction);
      state = ctx->engine->run(input, (std::filesystem::path(dir_root) / input.request.id).string());
    } catch (const iiie::Error& e) {
      state.id = job_id != nullptr ? job_id : "edit-unreadable";
      state.fail(e.code(), e.what());
    }
    set_out(job_json, orch::to_json(state).dump(2));
    if (state.phase == orch::JobPhase::Done) return IIIE_OK;
    return fail(status_of(state.error->code), state.error->message);
  });
}

iiie_status iiie_batch(iiie_context* ctx, const char* manifest_path, const char* out_dir, int parallelism,
                       char** summary_json) {
  if (summary_json != nullptr) *summary_json = nullptr;
  if (ctx == nullptr || manifest_path == nullptr) return fail(IIIE_INVALID_ARGUMENT, "context and manifest are required");
  if (parallelism < 1) return fail(IIIE_INVALID_ARGUMENT, "parallelism must be >= 1");
  return guarded([&] {
    const auto records = orch::load_manifest(manifest_path);
    const std::string dir = out_dir != nullptr ? out_dir : ctx->config.out_dir;
    const auto summary = orch::run_batch(*ctx->engine, records, dir, parallelism);
    json j;
    j["records"] = json::array();
    for (const auto& r : summary.records) j["records"].push_back(orch::to_json(r));
    j["total"] = summary.records.size();
    j["succeeded"] = summary.succeeded();
    j["success_rate"] = summary.success_rate();
    set_out(summary_json, j.dump(2));
    return IIIE_OK;
  });
}

iiie_status iiie_service_start(iiie_context* ctx, const char* host, int port, int workers, const char* out_dir,
                               iiie_service** out) {
  if (out == nullptr || ctx == nullptr) return fail(IIIE_INVALID_ARGUMENT, "context and out are required");
  *out = nullptr;
  return guarded([&] {
    orch::ServiceOptions options{ctx->config.out_dir, ctx->config.workers, ctx->config.host, ctx->config.port};
    if (host != nullptr) options.host = host;
    if (port >= 0) options.port = port;
    if (workers >= 0) options.workers = workers;
    if (out_dir != nullptr) options.out_dir = out_dir;
    auto svc = std::make_unique<iiie_service>();
    svc->service = std::make_unique<orch::EditService>(ctx->engine, options);
    svc->service->start();
    *out = svc.release();
    return IIIE_OK;
  });
}

int iiie_service_port(const iiie_service* service) { return service != nullptr ? service->service->port() : -1; }

void iiie_service_stop(iiie_service* service) {
  if (service != nullptr) service->service->stop();
}

void iiie_service_destroy(iiie_service* service) { delete service; }

iiie_status iiie_mock_backends_start(const char* fixtures_dir, const char* rules_path, const char* host, int port_base,
                                     iiie_mock_backends** out) {
  if (out == nullptr) return fail(IIIE_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto rules = rules_path != nullptr ? iiie::backend::ChatRuleTable::load(rules_path) : iiie::backend::default_chat_rules();
    auto fixtures = fixtures_dir != nullptr ? iiie::backend::GroundFixtures::load_dir(fixtures_dir) : iiie::backend::GroundFixtures{};
    auto mocks = std::make_unique<iiie_mock_backends>();
    mocks->servers = std::make_unique<iiie::backend::MockServerSet>(
        iiie::backend::MockSuite::make(std::move(rules), std::move(fixtures)), port_base,
        host != nullptr ? host : "127.0.0.1");
    *out = mocks.release();
    return IIIE_OK;
  });
}

iiie_status iiie_mock_backends_urls(const iiie_mock_backends* mocks, char** urls_json) {
  if (mocks == nullptr || urls_json == nullptr) return fail(IIIE_INVALID_ARGUMENT, "mocks and urls_json are required");
  return guarded([&] {
    const auto urls = mocks->servers->urls();
    set_out(urls_json, json{{"chat", urls.chat}, {"ground", urls.ground}, {"inpaint", urls.inpaint},
                            {"global_edit", urls.global_edit}}
                           .dump());
    return IIIE_OK;
  });
}

void iiie_mock_backends_stop(iiie_mock_backends* mocks) {
  if (mocks != nullptr) mocks->servers->stop();
}

void iiie_mock_backends_destroy(iiie_mock_backends* mocks) { delete mocks; }

iiie_status iiie_eval_aggregate(const char* ratings_text, char** csv, char** table) {
  if (csv != nullptr) *csv = nullptr;
  if (table != nullptr) *table = nullptr;
  if (ratings_text == nullptr) return fail(IIIE_INVALID_ARGUMENT, "ratings_text is NULL");
  return guarded([&] {
    const auto records = iiie::eval::parse_ratings(ratings_text);
    const auto rows = iiie::eval::rank_methods(iiie::eval::aggregate(records));
    set_out(csv, iiie::eval::render_csv(rows));
    set_out(table, iiie::eval::render_table(rows));
    return IIIE_OK;
  });
}

iiie_status iiie_eval_rank(const char* text, char** table) {
  if (table != nullptr) *table = nullptr;
  if (text == nullptr) return fail(IIIE_INVALID_ARGUMENT, "text is NULL");
  return guarded([&] {
    const std::string_view body(text);
    const auto first_line = body.substr(0, body.find('\n'));
    const bool aggregate_csv = first_line.rfind("method,rank,", 0) == 0;
    const auto scores = aggregate_csv ? iiie::eval::parse_scores_csv(body)
                                      : iiie::eval::aggregate(iiie::eval::parse_ratings(body));
    set_out(table, iiie::eval::render_table(iiie::eval::rank_methods(scores)));
    return IIIE_OK;
  });
}

}  // extern "C"

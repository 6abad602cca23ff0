// Links against the shared library only; no internal headers.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "iiie/iiie.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& rel) { return std::string(IIIE_FIXTURE_DIR) + "/" + rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Dir {
  fs::path path;
  Dir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("iiie-capi-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~Dir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

// Owns a char* returned by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { iiie_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

std::string mock_config() {
  return json{{"backends", {{"mode", "mock"}, {"fixtures", fixture("grounding")}}},
              {"retry", {{"backoff_ms", {1, 1, 1}}, {"connect_timeout_s", 1}}}}
      .dump();
}

iiie_context* mock_context() {
  iiie_context* ctx = nullptr;
  REQUIRE(iiie_context_create_json(mock_config().c_str(), nullptr, &ctx) == IIIE_OK);
  return ctx;
}

}  // namespace

TEST_CASE("status names and argument checks") {
  CHECK(std::string(iiie_status_name(IIIE_OK)) == "OK");
  CHECK(std::string(iiie_status_name(IIIE_GROUNDING_EMPTY)) == "GroundingEmpty");
  CHECK(std::string(iiie_status_name(IIIE_MALFORMED_IMAGE)) == "MalformedImage");
  CHECK(iiie_status_name(static_cast<iiie_status>(12345)) != nullptr);

  iiie_context* ctx = nullptr;
  CHECK(iiie_context_create("/nonexistent/config.json", &ctx) == IIIE_CONFIG_ERROR);
  CHECK(ctx == nullptr);
  CHECK(std::string(iiie_last_error()).find("config") != std::string::npos);
  CHECK(iiie_context_create_json("{not json", nullptr, &ctx) == IIIE_CONFIG_ERROR);
  CHECK(iiie_context_create(nullptr, nullptr) == IIIE_INVALID_ARGUMENT);
  CHECK(iiie_edit(nullptr, "a", "b", nullptr, nullptr, "c", nullptr, nullptr) == IIIE_INVALID_ARGUMENT);
  iiie_context_destroy(nullptr);
  iiie_string_free(nullptr);
}

TEST_CASE("edit through the C API") {
  iiie_context* ctx = mock_context();
  Dir out;
  const int64_t seed = 4;
  Owned job;
  REQUIRE(iiie_edit(ctx, fixture("images/horse-01.png").c_str(), "Make the horse into a unicorn", nullptr, &seed,
                    out.path.c_str(), "unicorn", &job.p) == IIIE_OK);
  const json state = json::parse(job.str());
  CHECK(state.at("phase") == "Done");
  CHECK(state.at("plan").at("category") == "LocalEdit");
  CHECK(fs::exists(out / "unicorn/result.png"));
  CHECK(fs::exists(out / "unicorn/plan.json"));

  Owned anon;
  REQUIRE(iiie_edit(ctx, fixture("images/horse-01.png").c_str(), "make it smile", nullptr, nullptr, out.path.c_str(),
                    nullptr, &anon.p) == IIIE_OK);
  const std::string id = json::parse(anon.str()).at("id");
  CHECK(id.rfind("edit-", 0) == 0);
  CHECK(fs::exists(out / (id + "/mask.png")));

  Owned lamp;
  CHECK(iiie_edit(ctx, fixture("images/horse-01.png").c_str(), "remove the lamp", nullptr, nullptr, out.path.c_str(),
                  "lamp", &lamp.p) == IIIE_GROUNDING_EMPTY);
  CHECK(json::parse(lamp.str()).at("error").at("code") == "GroundingEmpty");

  std::ofstream(out / "junk.png") << "junk";
  Owned junk;
  CHECK(iiie_edit(ctx, (out / "junk.png").c_str(), "make it smile", nullptr, nullptr, out.path.c_str(), "junk",
                  &junk.p) == IIIE_MALFORMED_IMAGE);

  std::ofstream(out / "override.json") << R"({"category": "Sideways"})";
  Owned bad_override;
  CHECK(iiie_edit(ctx, fixture("images/horse-01.png").c_str(), "make it smile", (out / "override.json").c_str(),
                  nullptr, out.path.c_str(), "ov", &bad_override.p) == IIIE_INVALID_PLAN);
  iiie_context_destroy(ctx);
}

TEST_CASE("batch through the C API") {
  iiie_context* ctx = mock_context();
  Dir out;
  Owned summary;
  REQUIRE(iiie_batch(ctx, fixture("exemplars.jsonl").c_str(), out.path.c_str(), 3, &summary.p) == IIIE_OK);
  const json s = json::parse(summary.str());
  CHECK(s.at("succeeded") == 6);
  CHECK(s.at("records").size() == 6);
  CHECK(fs::exists(out / "batch_summary.jsonl"));

  std::ofstream(out / "dup.jsonl") << R"({"id":"a","image_path":"x","instruction":"i"})" "\n"
                                   << R"({"id":"a","image_path":"x","instruction":"i"})" "\n";
  Owned none;
  CHECK(iiie_batch(ctx, (out / "dup.jsonl").c_str(), out.path.c_str(), 1, &none.p) == IIIE_MANIFEST_MALFORMED);
  iiie_context_destroy(ctx);
}

TEST_CASE("HTTP mock backends give the same bytes as the in-process mocks") {
  iiie_mock_backends* mocks = nullptr;
  REQUIRE(iiie_mock_backends_start(fixture("grounding").c_str(), nullptr, "127.0.0.1", 0, &mocks) == IIIE_OK);
  Owned urls;
  REQUIRE(iiie_mock_backends_urls(mocks, &urls.p) == IIIE_OK);
  json cfg = json::parse(urls.str());
  json doc{{"backends",
            {{"mode", "http"},
             {"chat", cfg.at("chat")},
             {"ground", cfg.at("ground")},
             {"inpaint", cfg.at("inpaint")},
             {"global_edit", cfg.at("global_edit")}}},
           {"retry", {{"backoff_ms", {1, 1, 1}}}}};
  iiie_context* http = nullptr;
  REQUIRE(iiie_context_create_json(doc.dump().c_str(), nullptr, &http) == IIIE_OK);
  iiie_context* local = mock_context();

  Dir out;
  for (const char* instruction : {"Make the horse into a unicorn", "let's see it in winter", "Change the scene's background"}) {
    CAPTURE(instruction);
    Owned a, b;
    REQUIRE(iiie_edit(http, fixture("images/horse-01.png").c_str(), instruction, nullptr, nullptr,
                      (out / "http").c_str(), "job", &a.p) == IIIE_OK);
    REQUIRE(iiie_edit(local, fixture("images/horse-01.png").c_str(), instruction, nullptr, nullptr,
                      (out / "local").c_str(), "job", &b.p) == IIIE_OK);
    for (const char* file : {"plan.json", "mask.png", "result.png"}) {
      CHECK(slurp(out / (std::string("http/job/") + file)) == slurp(out / (std::string("local/job/") + file)));
    }
  }
  iiie_context_destroy(http);
  iiie_context_destroy(local);
  iiie_mock_backends_stop(mocks);
  iiie_mock_backends_destroy(mocks);
}

TEST_CASE("service through the C API") {
  iiie_context* ctx = mock_context();
  Dir out;
  iiie_service* svc = nullptr;
  REQUIRE(iiie_service_start(ctx, "127.0.0.1", 0, 1, out.path.c_str(), &svc) == IIIE_OK);
  const int port = iiie_service_port(svc);
  CHECK(port > 0);
  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  iiie_service* clash = nullptr;
  CHECK(iiie_service_start(ctx, "127.0.0.1", port, 1, (out / "other").c_str(), &clash) == IIIE_PORT_UNAVAILABLE);
  iiie_service_stop(svc);
  iiie_service_destroy(svc);
  iiie_context_destroy(ctx);
}

TEST_CASE("eval through the C API") {
  const std::string ratings = slurp(fixture("ratings/table1.csv"));
  Owned csv, table;
  REQUIRE(iiie_eval_aggregate(ratings.c_str(), &csv.p, &table.p) == IIIE_OK);
  CHECK(csv.str().find("IIIE,1,1200,0.51,0.78,0.80") != std::string::npos);
  CHECK(csv.str().find("LEdits++,2,1200,0.46,0.64,0.74") != std::string::npos);
  CHECK(csv.str().find("Tasvir,3,1200,0.40,0.49,0.62") != std::string::npos);
  Owned ranked, ranked_raw;
  REQUIRE(iiie_eval_rank(csv.str().c_str(), &ranked.p) == IIIE_OK);
  REQUIRE(iiie_eval_rank(ratings.c_str(), &ranked_raw.p) == IIIE_OK);
  CHECK(ranked.str() == table.str());
  CHECK(ranked_raw.str() == table.str());

  Owned e;
  CHECK(iiie_eval_aggregate("method,image_id,metric,rater_id,score\nA,i,EditFaithfulness,r1,1\n"
                            "A,i,EditFaithfulness,r2,1\n"
                            "A,i,ContentPreservation,r1,1\nA,i,ContentPreservation,r2,1\n"
                            "A,i,OverallInstructionFollowing,r1,1\nA,i,OverallInstructionFollowing,r2,1\n",
                            &e.p, nullptr) == IIIE_EVEN_PANEL);
}

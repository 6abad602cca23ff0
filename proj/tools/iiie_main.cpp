#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "iiie/iiie.h"

namespace {

int report(iiie_status status) {
  if (status != IIIE_OK) {
    std::fprintf(stderr, "iiie: %s: %s\n", iiie_status_name(status), iiie_last_error());
  }
  return status == IIIE_OK ? 0 : static_cast<int>(status);
}

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { iiie_string_free(s); }
};

struct Context {
  iiie_context* ctx = nullptr;
  ~Context() { iiie_context_destroy(ctx); }
};

sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void wait_for_stop_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instruction-guided image editing orchestrator"};
  app.require_subcommand(1);

  std::string config;
  app.add_option("--config", config, "JSON config file");

  auto* edit = app.add_subcommand("edit", "Run one edit");
  std::string image, instruction, override_plan, out_dir, job_id;
  std::optional<std::int64_t> seed;
  edit->add_option("--image", image, "Source image (PNG or JPEG)")->required();
  edit->add_option("--instruction", instruction, "Edit instruction")->required();
  edit->add_option("--override-plan", override_plan, "JSON plan override");
  edit->add_option("--seed", seed, "Generation seed");
  edit->add_option("--out", out_dir, "Output root (default: service.out_dir)");
  edit->add_option("--id", job_id, "Job id (default: derived from the inputs)");

  auto* batch = app.add_subcommand("batch", "Run a JSONL manifest");
  std::string manifest;
  int parallelism = 1;
  batch->add_option("--manifest", manifest, "JSONL manifest")->required();
  batch->add_option("--out", out_dir, "Output root (default: service.out_dir)");
  batch->add_option("--parallelism", parallelism, "Concurrent jobs")->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP edit API");
  int port = -1;
  int workers = -1;
  std::string host;
  serve->add_option("--port", port, "Listen port (default: service.port)");
  serve->add_option("--host", host, "Listen address (default: service.host)");
  serve->add_option("--workers", workers, "Worker threads (default: service.workers)");
  serve->add_option("--out", out_dir, "Job directory root (default: service.out_dir)");

  auto* mocks = app.add_subcommand("mock-backends", "Serve the deterministic backends");
  int port_base = 7801;
  std::string fixtures, rules;
  mocks->add_option("--port-base", port_base, "chat=P, ground=P+1, inpaint=P+2, global-edit=P+3");
  mocks->add_option("--fixtures", fixtures, "Grounding fixture directory");
  mocks->add_option("--rules", rules, "Chat rule table (default: builtin)");
  mocks->add_option("--host", host, "Listen address");

  CLI11_PARSE(app, argc, argv);

  const auto or_null = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };

  if (*mocks) {
    const sigset_t stop = block_stop_signals();
    iiie_mock_backends* m = nullptr;
    if (const auto st = iiie_mock_backends_start(or_null(fixtures), or_null(rules), or_null(host), port_base, &m); st != IIIE_OK) {
      return report(st);
    }
    OwnedString urls;
    iiie_mock_backends_urls(m, &urls.s);
    std::cout << urls.s << std::endl;
    wait_for_stop_signal(stop);
    iiie_mock_backends_stop(m);
    iiie_mock_backends_destroy(m);
    return 0;
  }

  Context ctx;
  if (const auto st = iiie_context_create(or_null(config), &ctx.ctx); st != IIIE_OK) return report(st);

  if (*edit) {
    OwnedString job;
    const std::int64_t seed_value = seed.value_or(0);
    const auto st = iiie_edit(ctx.ctx, image.c_str(), instruction.c_str(), or_null(override_plan),
                              seed ? &seed_value : nullptr, or_null(out_dir), or_null(job_id), &job.s);
    if (job.s != nullptr) std::cout << job.s << std::endl;
    return report(st);
  }

  if (*batch) {
    OwnedString summary;
    const auto st = iiie_batch(ctx.ctx, manifest.c_str(), or_null(out_dir), parallelism, &summary.s);
    if (summary.s != nullptr) std::cout << summary.s << std::endl;
    return report(st);
  }

  if (*serve) {
    const sigset_t stop = block_stop_signals();
    iiie_service* svc = nullptr;
    if (const auto st = iiie_service_start(ctx.ctx, or_null(host), port, workers, or_null(out_dir), &svc); st != IIIE_OK) {
      return report(st);
    }
    std::cout << nlohmann::json{{"port", iiie_service_port(svc)}}.dump() << std::endl;
    wait_for_stop_signal(stop);
    iiie_service_stop(svc);
    iiie_service_destroy(svc);
    return 0;
  }
  return 0;
}

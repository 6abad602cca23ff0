#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "analysis/analyzer.hpp"
#include "analysis/templates.hpp"
#include "backend/client.hpp"
#include "backend/mocks.hpp"
#include "orchestrator/config.hpp"
#include "orchestrator/job.hpp"

namespace iiie::orchestrator {

struct JobInput {
  EditRequest request;
  std::optional<PlanOverride> override_plan;
  std::optional<std::int64_t> seed;  // replaces generation.seed
};

using PhaseObserver = std::function<void(const JobState&)>;

struct PipelineSettings {
  mask::MaskConfig mask;
  generation::GenerationConfig generation;
  FallbackPolicy fallback = FallbackPolicy::Never;
};

// Runs the four steps for one job and persists its artifacts. Shared by the
// CLI, batch runner and HTTP service; safe to call from several threads.
class Engine {
 public:
  Engine(backend::Backends backends, analysis::PromptTemplateSet templates, PipelineSettings settings);

  // Builds HTTP clients or in-process mocks as the config says.
  static Engine from_config(const ServiceConfig& cfg);

  // Never throws for pipeline failures: they end the job as Failed with a
  // closed-set code. Writes plan.json, mask.png, result.png (each atomically,
  // in that order) and transcripts/ under `job_dir`. `observe` sees every
  // phase change.
  JobState run(const JobInput& input, const std::string& job_dir, const PhaseObserver& observe = {}) const;

  // Steps 1-2 with overrides and fallback applied. Throws Error.
  analysis::AnalysisRecord analyze(const std::string& instruction, const PlanOverride& ov,
                                   const analysis::InstructionAnalyzer& analyzer) const;

  const backend::Backends& backends() const { return backends_; }
  const PipelineSettings& settings() const { return settings_; }

 private:
  backend::Backends backends_;
  analysis::PromptTemplateSet templates_;
  PipelineSettings settings_;
};

// plan.json body: the EditPlan fields plus an "analysis" block.
nlohmann::json plan_document(const analysis::AnalysisRecord& record, const PlanOverride& ov);

}  // namespace iiie::orchestrator

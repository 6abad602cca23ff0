#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/plan.hpp"

namespace iiie::orchestrator {

enum class JobPhase { Queued, Analyzing, Masking, Generating, Done, Failed };

std::string_view to_string(JobPhase phase);
std::optional<JobPhase> phase_from_string(std::string_view name);

// Allowed moves: Queued -> Analyzing -> Masking -> Generating -> Done, and
// any non-terminal phase -> Failed.
bool transition_allowed(JobPhase from, JobPhase to);

struct JobError {
  ErrorCode code = ErrorCode::BackendUnreachable;  // always one of the closed five
  std::string message;
};

struct JobState {
  std::string id;
  JobPhase phase = JobPhase::Queued;
  std::optional<EditPlan> plan;
  std::map<std::string, std::string> artifacts;  // artifact name -> file path
  std::optional<JobError> error;
  std::map<std::string, std::string> timestamps;  // phase name -> UTC ISO-8601

  bool terminal() const { return phase == JobPhase::Done || phase == JobPhase::Failed; }

  // Throws PreconditionViolation on a move the lifecycle does not allow.
  void advance(JobPhase next);
  // Moves to Failed with the closed-set code for `code`.
  void fail(ErrorCode code, std::string message);
};

nlohmann::json to_json(const JobState& state);
JobState job_state_from_json(const nlohmann::json& j);

std::string utc_timestamp();

// User corrections applied on top of the analysis.
struct PlanOverride {
  std::optional<EditCategory> category;
  std::optional<std::string> main_object;
  std::optional<std::string> addition_subject;
  std::optional<std::string> target_prompt;
  std::optional<Mask> user_mask;

  bool empty() const {
    return !category && !main_object && !addition_subject && !target_prompt && !user_mask;
  }
};

// Reads {"category", "main_object", "addition_subject", "target_prompt",
// "mask"}; "mask" is a PNG path resolved against `base_dir`. Throws
// InvalidPlan for unknown names or field combinations no plan can satisfy.
PlanOverride override_from_json(const nlohmann::json& j, const std::string& base_dir);
PlanOverride load_override(const std::string& path);
void check_override(const PlanOverride& ov);
nlohmann::json to_json(const PlanOverride& ov);  // the mask is not serialized

}  // namespace iiie::orchestrator

#include "orchestrator/job.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace iiie::orchestrator {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kPhaseNames{"Queued", "Analyzing", "Masking",
                                                      "Generating", "Done", "Failed"};

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw Error(ErrorCode::InvalidPlan, std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

std::string_view to_string(JobPhase phase) { return kPhaseNames[static_cast<std::size_t>(phase)]; }

std::optional<JobPhase> phase_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<JobPhase>(i);
  }
  return std::nullopt;
}

bool transition_allowed(JobPhase from, JobPhase to) {
  if (from == JobPhase::Done || from == JobPhase::Failed) return false;
  if (to == JobPhase::Failed) return true;
  return static_cast<int>(to) == static_cast<int>(from) + 1;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

void JobState::advance(JobPhase next) {
  if (!transition_allowed(phase, next)) {
    throw Error(ErrorCode::PreconditionViolation, "job " + id + " cannot move from " +
                                                      std::string(to_string(phase)) + " to " +
                                                      std::string(to_string(next)));
  }
  phase = next;
  timestamps[std::string(to_string(next))] = utc_timestamp();
}

void JobState::fail(ErrorCode code, std::string message) {
  advance(JobPhase::Failed);
  error = JobError{job_error_code(code), std::move(message)};
}

json to_json(const JobState& s) {
  json j;
  j["id"] = s.id;
  j["phase"] = to_string(s.phase);
  j["plan"] = s.plan ? plan_to_json(*s.plan) : json(nullptr);
  j["artifacts"] = s.artifacts;
  j["error"] = s.error ? json{{"code", to_string(s.error->code)}, {"message", s.error->message}} : json(nullptr);
  j["timestamps"] = s.timestamps;
  return j;
}

JobState job_state_from_json(const json& j) {
  JobState s;
  s.id = j.at("id").get<std::string>();
  const auto phase = phase_from_string(j.at("phase").get<std::string>());
  if (!phase) throw Error(ErrorCode::IoError, "unknown job phase in record for " + s.id);
  s.phase = *phase;
  if (j.contains("plan") && !j.at("plan").is_null()) s.plan = plan_from_json(j.at("plan"));
  if (j.contains("artifacts")) s.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  if (j.contains("error") && !j.at("error").is_null()) {
    const auto code = error_code_from_string(j.at("error").at("code").get<std::string>());
    s.error = JobError{code.value_or(ErrorCode::BackendUnreachable), j.at("error").at("message").get<std::string>()};
  }
  if (j.contains("timestamps")) s.timestamps = j.at("timestamps").get<std::map<std::string, std::string>>();
  return s;
}

PlanOverride override_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidPlan, "override must be a JSON object");
  PlanOverride ov;
  if (const auto c = opt_string(j, "category")) {
    ov.category = category_from_string(*c);
    if (!ov.category) throw Error(ErrorCode::InvalidPlan, "unknown category '" + *c + "' in override");
  }
  ov.main_object = opt_string(j, "main_object");
  ov.addition_subject = opt_string(j, "addition_subject");
  ov.target_prompt = opt_string(j, "target_prompt");
  if (const auto mask_path = opt_string(j, "mask")) {
    std::filesystem::path p(*mask_path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    ov.user_mask = decode_mask(read_file(p.string()));
  }
  check_override(ov);
  return ov;
}

PlanOverride load_override(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open override file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidPlan, "override file " + path + ": " + e.what());
  }
  return override_from_json(j, std::filesystem::path(path).parent_path().string());
}

void check_override(const PlanOverride& ov) {
  const auto present = [](const std::optional<std::string>& s) { return s && !trim(*s).empty(); };
  if (ov.target_prompt && trim(*ov.target_prompt).empty()) {
    throw Error(ErrorCode::InvalidPlan, "override target_prompt is empty");
  }
  if (present(ov.main_object) && present(ov.addition_subject)) {
    throw Error(ErrorCode::InvalidPlan, "override sets both main_object and addition_subject");
  }
  if (!ov.category) return;
  switch (*ov.category) {
    case EditCategory::GlobalEdit:
      if (present(ov.main_object) || present(ov.addition_subject)) {
        throw Error(ErrorCode::InvalidPlan, "GlobalEdit override cannot name an object");
      }
      break;
    case EditCategory::Addition:
      if (present(ov.main_object)) throw Error(ErrorCode::InvalidPlan, "Addition override cannot set main_object");
      break;
    default:
      if (present(ov.addition_subject)) {
        throw Error(ErrorCode::InvalidPlan, "addition_subject is only valid for Addition");
      }
      break;
  }
}

json to_json(const PlanOverride& ov) {
  json j = json::object();
  if (ov.category) j["category"] = to_string(*ov.category);
  if (ov.main_object) j["main_object"] = *ov.main_object;
  if (ov.addition_subject) j["addition_subject"] = *ov.addition_subject;
  if (ov.target_prompt) j["target_prompt"] = *ov.target_prompt;
  return j;
}

}  // namespace iiie::orchestrator

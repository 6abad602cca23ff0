#include "orchestrator/pipeline.hpp"

#include <filesystem>

#include "core/errors.hpp"
#include "generation/router.hpp"
#include "mask/mask_engine.hpp"
#include "orchestrator/transcript.hpp"

namespace iiie::orchestrator {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool has_text(const std::optional<std::string>& s) { return s && !trim(*s).empty(); }

bool falls_back_on(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendUnreachable:
    case ErrorCode::BackendRejected:
    case ErrorCode::BackendContractViolation:
    case ErrorCode::AnalysisUnparseable:
      return true;
    default:
      return false;
  }
}

// Puts the user's object phrase into whichever slot the final category uses.
void apply_object_override(analysis::AnalysisRecord& r, const PlanOverride& ov) {
  std::optional<std::string> phrase;
  if (has_text(ov.main_object)) phrase = analysis::normalize_phrase(*ov.main_object);
  if (has_text(ov.addition_subject)) phrase = analysis::normalize_phrase(*ov.addition_subject);
  if (!phrase || r.category == EditCategory::GlobalEdit) return;
  if (r.category == EditCategory::Addition) {
    r.addition_subject = phrase;
    r.main_object.reset();
  } else {
    r.main_object = phrase;
    r.addition_subject.reset();
  }
}

void write_artifact(JobState& state, const fs::path& dir, const std::string& name, std::span<const std::uint8_t> bytes) {
  const fs::path path = dir / name;
  write_file_atomic(path.string(), bytes);
  state.artifacts[name] = path.string();
}

void write_artifact(JobState& state, const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path path = dir / name;
  write_file_atomic(path.string(), text);
  state.artifacts[name] = path.string();
}

}  // namespace

Engine::Engine(backend::Backends backends, analysis::PromptTemplateSet templates, PipelineSettings settings)
    : backends_(std::move(backends)), templates_(std::move(templates)), settings_(settings) {
  settings_.mask.validate();
  settings_.generation.validate();
}

Engine Engine::from_config(const ServiceConfig& cfg) {
  cfg.validate();
  backend::Backends backends;
  if (cfg.backend_mode == "mock") {
    auto rules = cfg.mock_rules_path.empty() ? backend::default_chat_rules() : backend::ChatRuleTable::load(cfg.mock_rules_path);
    auto fixtures = cfg.mock_fixtures_dir.empty() ? backend::GroundFixtures{} : backend::GroundFixtures::load_dir(cfg.mock_fixtures_dir);
    backends = backend::MockSuite::make(std::move(rules), std::move(fixtures)).backends();
  } else {
    backends = backend::make_http_backends(cfg.urls, cfg.retry);
  }
  auto templates = cfg.templates_path.empty() ? analysis::PromptTemplateSet::builtin()
                                              : analysis::PromptTemplateSet::load(cfg.templates_path);
  return Engine(std::move(backends), std::move(templates), {cfg.mask, cfg.generation, cfg.fallback});
}

analysis::AnalysisRecord Engine::analyze(const std::string& instruction, const PlanOverride& ov,
                                         const analysis::InstructionAnalyzer& analyzer) const {
  const auto from_backend = [&] {
    analysis::AnalysisRecord r;
    r.provenance = analysis::Provenance::Llm;
    if (ov.category) {
      r.category = *ov.category;
      r.confidence = analysis::Confidence::High;
    } else {
      const auto c = analyzer.classify(instruction);
      r.category = c.category;
      r.confidence = c.confidence;
    }
    const bool user_named_object = has_text(ov.main_object) || has_text(ov.addition_subject);
    if (r.category != EditCategory::GlobalEdit && !user_named_object) {
      const auto objects = analyzer.extract_objects(instruction, r.category);
      r.main_object = objects.main_object;
      r.addition_subject = objects.addition_subject;
    }
    apply_object_override(r, ov);
    if (has_text(ov.target_prompt)) {
      r.target_prompt = trim(*ov.target_prompt);
    } else {
      r.target_prompt = analyzer.build_target_prompt(instruction, r.category, {r.main_object, r.addition_subject});
    }
    return r;
  };
  const auto from_heuristic = [&] {
    analysis::AnalysisRecord r = analysis::fallback_classify(instruction, ov.category);
    apply_object_override(r, ov);
    if (has_text(ov.target_prompt)) r.target_prompt = trim(*ov.target_prompt);
    return r;
  };

  analysis::AnalysisRecord record;
  switch (settings_.fallback) {
    case FallbackPolicy::Always:
      record = from_heuristic();
      break;
    case FallbackPolicy::Never:
      record = from_backend();
      break;
    case FallbackPolicy::OnBackendFailure:
      try {
        record = from_backend();
      } catch (const Error& e) {
        if (!falls_back_on(e.code())) throw;
        record = from_heuristic();
      }
      break;
  }
  if (const auto violations = validate_plan(record.to_plan()); !violations.empty()) {
    throw Error(ErrorCode::AnalysisUnparseable,
                "analysis produced an invalid plan: " + violations.front().field + ": " + violations.front().message);
  }
  return record;
}

json plan_document(const analysis::AnalysisRecord& record, const PlanOverride& ov) {
  json doc = plan_to_json(record.to_plan());
  json overridden = json::array();
  if (ov.category) overridden.push_back("category");
  if (has_text(ov.main_object) || has_text(ov.addition_subject)) overridden.push_back("object");
  if (has_text(ov.target_prompt)) overridden.push_back("target_prompt");
  if (ov.user_mask && record.category != EditCategory::GlobalEdit) overridden.push_back("mask");
  doc["analysis"] = {{"confidence", to_string(record.confidence)},
                     {"provenance", to_string(record.provenance)},
                     {"overridden", overridden}};
  return doc;
}

JobState Engine::run(const JobInput& input, const std::string& job_dir, const PhaseObserver& observe) const {
  JobState state;
  state.id = input.request.id;
  state.timestamps["Queued"] = utc_timestamp();
  const auto notify = [&] {
    if (observe) observe(state);
  };
  const PlanOverride ov = input.override_plan.value_or(PlanOverride{});
  const fs::path dir(job_dir);

  TranscriptRecorder recorder;
  const backend::Backends recorded = recorder.wrap(backends_);
  const analysis::InstructionAnalyzer analyzer(recorded.chat, templates_);

  try {
    fs::create_directories(dir);
    state.advance(JobPhase::Analyzing);
    notify();
    if (input.request.image.empty()) throw Error(ErrorCode::MalformedImage, "source image is empty");
    check_override(ov);
    const std::string instruction = normalized_instruction(input.request.instruction);
    const analysis::AnalysisRecord record = analyze(instruction, ov, analyzer);
    const EditPlan plan = record.to_plan();
    state.plan = plan;
    write_artifact(state, dir, "plan.json", plan_document(record, ov).dump(2) + "\n");

    state.advance(JobPhase::Masking);
    notify();
    const ImageBuffer& image = input.request.image;
    Mask mask;
    if (ov.user_mask && plan.category != EditCategory::GlobalEdit) {
      mask = resample_nearest(*ov.user_mask, image.width(), image.height());
    } else {
      const mask::MaskClients clients{recorded.ground.get(), &analyzer};
      mask = mask::acquire_mask(plan, instruction, image, clients, settings_.mask);
    }
    write_artifact(state, dir, "mask.png", encode_mask(mask));

    state.advance(JobPhase::Generating);
    notify();
    generation::GenerationConfig gen = settings_.generation;
    if (input.seed) gen.seed = *input.seed;
    const ImageBuffer result = generation::run_generation({plan, instruction, image, mask}, recorded, gen);
    write_artifact(state, dir, "result.png", encode_image(result));
    state.advance(JobPhase::Done);
  } catch (const Error& e) {
    state.fail(e.code(), e.what());
  } catch (const std::exception& e) {
    state.fail(ErrorCode::IoError, e.what());
  }

  try {
    const auto entries = recorder.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string name = TranscriptRecorder::file_name(i, entries[i].endpoint);
      fs::create_directories((dir / name).parent_path());
      write_artifact(state, dir, name, to_json(entries[i]).dump(2) + "\n");
    }
  } catch (const std::exception&) {
    // transcripts are diagnostic; the job outcome stands
  }
  notify();
  return state;
}

}  // namespace iiie::orchestrator

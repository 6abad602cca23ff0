#include "mask/mask_engine.hpp"

#include <vector>

#include "core/errors.hpp"
#include "mask/mask_ops.hpp"

namespace iiie::mask {

int MaskConfig::radius_for(int width, int height) const {
  return dilation_radius.value_or(default_dilation_radius(width, height));
}

void MaskConfig::validate() const {
  if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
    throw Error(ErrorCode::ConfigError, "mask.confidence_threshold must lie in (0, 1)");
  }
  if (dilation_radius && *dilation_radius < 0) {
    throw Error(ErrorCode::ConfigError, "mask.dilation_radius must be >= 0");
  }
  if (!(addition_box_fraction > 0.0 && addition_box_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "mask.addition_box_fraction must lie in (0, 1)");
  }
}

Mask ground_object(const ImageBuffer& image, const std::string& phrase, backend::GroundBackend& ground,
                   const MaskConfig& cfg) {
  if (trim(phrase).empty()) throw Error(ErrorCode::PreconditionViolation, "grounding phrase is empty");
  const backend::GroundRequest request{image, phrase};
  const backend::GroundResponse response = ground.ground(request);
  backend::check_ground_response(request, response);

  std::vector<Mask> kept;
  for (const auto& d : response.detections) {
    if (d.confidence >= cfg.confidence_threshold) kept.push_back(d.mask);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::GroundingEmpty, "no detection of '" + phrase + "' reached confidence " +
                                               std::to_string(cfg.confidence_threshold));
  }
  return union_of(kept);
}

BoundingBox propose_addition_box(const ImageBuffer& image, const std::string& instruction,
                                 const std::string& addition_subject, const analysis::InstructionAnalyzer* analyzer,
                                 const MaskConfig& cfg) {
  if (analyzer != nullptr) {
    try {
      const BoundingBox box = analyzer->propose_box(instruction, addition_subject, image).clamped(image.width(), image.height());
      if (!box.empty()) return box;
    } catch (const Error&) {
      // any backend or parse failure falls through to the heuristic
    }
  }
  return addition_heuristic_box(image.width(), image.height(), cfg.addition_box_fraction);
}

namespace {

Mask grounded_with_retry(const EditPlan& plan, const std::string& instruction, const ImageBuffer& image,
                         const MaskClients& clients, const MaskConfig& cfg) {
  if (clients.ground == nullptr) throw Error(ErrorCode::PreconditionViolation, "no grounding backend");
  const std::string& phrase = *plan.main_object;
  try {
    return ground_object(image, phrase, *clients.ground, cfg);
  } catch (const Error& first) {
    if (first.code() != ErrorCode::GroundingEmpty || clients.analyzer == nullptr) throw;
    std::optional<std::string> synonym;
    try {
      synonym = clients.analyzer->suggest_synonym(instruction, plan.category, phrase);
    } catch (const Error&) {
      throw first;
    }
    if (!synonym) throw;
    return ground_object(image, *synonym, *clients.ground, cfg);
  }
}

}  // namespace

Mask acquire_mask(const EditPlan& plan, const std::string& instruction, const ImageBuffer& image,
                  const MaskClients& clients, const MaskConfig& cfg) {
  if (const auto violations = validate_plan(plan); !violations.empty()) {
    throw Error(ErrorCode::InvalidPlan, "plan fails validation: " + violations.front().message);
  }
  const int w = image.width();
  const int h = image.height();
  switch (plan.category) {
    case EditCategory::GlobalEdit:
      return Mask(w, h, true);
    case EditCategory::LocalEdit:
    case EditCategory::Remove:
      return dilate(grounded_with_retry(plan, instruction, image, clients, cfg), cfg.radius_for(w, h));
    case EditCategory::BackgroundEdit:
      return complement(dilate(grounded_with_retry(plan, instruction, image, clients, cfg), cfg.radius_for(w, h)));
    case EditCategory::Addition:
      return rasterize_box(
          propose_addition_box(image, instruction, *plan.addition_subject, clients.analyzer, cfg), w, h);
  }
  throw Error(ErrorCode::InvalidPlan, "unhandled edit category");
}

}  // namespace iiie::mask

#pragma once

#include <optional>
#include <string>

#include "analysis/analyzer.hpp"
#include "backend/client.hpp"
#include "core/plan.hpp"

namespace iiie::mask {

struct MaskConfig {
  double confidence_threshold = 0.35;
  std::optional<int> dilation_radius;  // unset: max(8, round(0.03 * min(w, h)))
  double addition_box_fraction = 0.25;

  int radius_for(int width, int height) const;
  // Throws ConfigError.
  void validate() const;
};

struct MaskClients {
  backend::GroundBackend* ground = nullptr;
  // Box proposals and synonym retries; may be null (heuristic box, no retry).
  const analysis::InstructionAnalyzer* analyzer = nullptr;
};

// Union of every detection at or above the threshold. Throws GroundingEmpty
// when none qualifies.
Mask ground_object(const ImageBuffer& image, const std::string& phrase, backend::GroundBackend& ground,
                   const MaskConfig& cfg);

// Backend proposal clamped into the image; the placement heuristic when the
// backend fails or the box is empty after clamping.
BoundingBox propose_addition_box(const ImageBuffer& image, const std::string& instruction,
                                 const std::string& addition_subject, const analysis::InstructionAnalyzer* analyzer,
                                 const MaskConfig& cfg);

// Step 3 dispatch on the plan's category:
//   GlobalEdit     -> whole image
//   LocalEdit      -> dilate(grounded object)
//   Remove         -> dilate(grounded object)
//   BackgroundEdit -> complement(dilate(grounded object))
//   Addition       -> rasterized proposed box
// A failed grounding is retried once with a synonym from the chat backend.
Mask acquire_mask(const EditPlan& plan, const std::string& instruction, const ImageBuffer& image,
                  const MaskClients& clients, const MaskConfig& cfg);

}  // namespace iiie::mask

#pragma once

#include <cstdint>
#include <string>

#include "backend/client.hpp"
#include "core/plan.hpp"

namespace iiie::generation {

enum class BackendKind { Inpaint, GlobalStyle };

std::string_view to_string(BackendKind kind);

// GlobalEdit goes to the global-style backend; the other four categories are
// inpainting.
BackendKind select_backend(EditCategory category);

struct GenerationConfig {
  std::int64_t seed = 0;
  bool paste_back = true;
  int feather_radius = 4;

  // Throws ConfigError.
  void validate() const;
};

// Restores source pixels outside the mask. Mask-1 pixels take the generated
// value; mask-0 pixels within `feather` (Euclidean) of a 1-bit blend with
// generated weight (feather + 1 - d) / (feather + 1); everything farther is
// the source byte for byte.
ImageBuffer paste_back(const ImageBuffer& source, const ImageBuffer& generated, const Mask& mask, int feather);

// Distance from each mask-0 pixel to the nearest 1-bit, capped: entries are
// the exact distance when <= cap, otherwise +infinity. Mask-1 pixels are 0.
std::vector<double> capped_distance_to_mask(const Mask& mask, int cap);

struct GenerationRequest {
  const EditPlan& plan;
  const std::string& instruction;
  const ImageBuffer& image;
  const Mask& mask;
};

// Step 4. Inpaint route: inpaint(image, mask, target_prompt, seed) then
// paste-back when enabled. Global route: global_edit(image, instruction,
// target_prompt, seed) with no paste-back.
ImageBuffer run_generation(const GenerationRequest& request, const backend::Backends& backends,
                           const GenerationConfig& cfg);

}  // namespace iiie::generation

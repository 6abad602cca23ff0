#include "generation/router.hpp"

#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace iiie::generation {

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::Inpaint ? "Inpaint" : "GlobalStyle";
}

BackendKind select_backend(EditCategory category) {
  switch (category) {
    case EditCategory::GlobalEdit:
      return BackendKind::GlobalStyle;
    case EditCategory::LocalEdit:
    case EditCategory::BackgroundEdit:
    case EditCategory::Addition:
    case EditCategory::Remove:
      return BackendKind::Inpaint;
  }
  return BackendKind::Inpaint;
}

void GenerationConfig::validate() const {
  if (feather_radius < 0) throw Error(ErrorCode::ConfigError, "generation.feather_radius must be >= 0");
}

std::vector<double> capped_distance_to_mask(const Mask& mask, int cap) {
  const int w = mask.width();
  const int h = mask.height();
  constexpr double kFar = std::numeric_limits<double>::infinity();
  std::vector<double> dist(mask.size(), kFar);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      if (mask.at(x, y)) {
        dist[i] = 0.0;
        continue;
      }
      long long best = std::numeric_limits<long long>::max();
      for (int dy = -cap; dy <= cap; ++dy) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) continue;
        for (int dx = -cap; dx <= cap; ++dx) {
          const int sx = x + dx;
          if (sx < 0 || sx >= w || !mask.at(sx, sy)) continue;
          best = std::min(best, static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy);
        }
      }
      if (best <= static_cast<long long>(cap) * cap) dist[i] = std::sqrt(static_cast<double>(best));
    }
  }
  return dist;
}

ImageBuffer paste_back(const ImageBuffer& source, const ImageBuffer& generated, const Mask& mask, int feather) {
  if (feather < 0) throw Error(ErrorCode::PreconditionViolation, "negative feather radius");
  const int w = source.width();
  const int h = source.height();
  if (generated.width() != w || generated.height() != h || !mask.same_dims(w, h)) {
    throw Error(ErrorCode::DimensionMismatch, "paste-back needs source, generated image and mask of equal size");
  }
  ImageBuffer out = source;
  const auto dist = feather > 0 ? capped_distance_to_mask(mask, feather) : std::vector<double>{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y)) {
        out.set(x, y, generated.at(x, y));
        continue;
      }
      if (feather == 0) continue;
      const double d = dist[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
      if (!(d <= feather)) continue;
      const double weight = (feather + 1 - d) / (feather + 1);
      const Rgb s = source.at(x, y);
      const Rgb g = generated.at(x, y);
      Rgb blended{};
      for (std::size_t c = 0; c < 3; ++c) {
        blended[c] = static_cast<std::uint8_t>(std::lround(s[c] * (1.0 - weight) + g[c] * weight));
      }
      out.set(x, y, blended);
    }
  }
  return out;
}

ImageBuffer run_generation(const GenerationRequest& request, const backend::Backends& backends,
                           const GenerationConfig& cfg) {
  const ImageBuffer& image = request.image;
  if (!request.mask.same_dims(image.width(), image.height())) {
    throw Error(ErrorCode::DimensionMismatch, "mask does not match image dimensions");
  }
  switch (select_backend(request.plan.category)) {
    case BackendKind::GlobalStyle: {
      if (!backends.global_edit) throw Error(ErrorCode::PreconditionViolation, "no global-edit backend");
      backend::ImageResponse response = backends.global_edit->global_edit(
          {image, request.instruction, request.plan.target_prompt, cfg.seed});
      backend::check_image_response(image, response.image);
      return std::move(response.image);
    }
    case BackendKind::Inpaint: {
      if (!backends.inpaint) throw Error(ErrorCode::PreconditionViolation, "no inpaint backend");
      backend::ImageResponse response =
          backends.inpaint->inpaint({image, request.mask, request.plan.target_prompt, cfg.seed});
      backend::check_image_response(image, response.image);
      if (!cfg.paste_back) return std::move(response.image);
      return paste_back(image, response.image, request.mask, cfg.feather_radius);
    }
  }
  throw Error(ErrorCode::PreconditionViolation, "unhandled backend kind");
}

}  // namespace iiie::generation

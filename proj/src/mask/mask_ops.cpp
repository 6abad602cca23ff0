#include "mask/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/errors.hpp"

namespace iiie::mask {

Mask complement(const Mask& m) {
  std::vector<std::uint8_t> bits(m.bits().begin(), m.bits().end());
  for (auto& b : bits) b ^= 1;
  return Mask(m.width(), m.height(), std::move(bits));
}

Mask union_of(std::span<const Mask> masks) {
  if (masks.empty()) throw Error(ErrorCode::PreconditionViolation, "union of zero masks");
  const Mask& first = masks.front();
  std::vector<std::uint8_t> bits(first.bits().begin(), first.bits().end());
  for (const Mask& m : masks.subspan(1)) {
    if (!m.same_dims(first.width(), first.height())) {
      throw Error(ErrorCode::DimensionMismatch,
                  "union of " + std::to_string(first.width()) + "x" + std::to_string(first.height()) +
                      " and " + std::to_string(m.width()) + "x" + std::to_string(m.height()));
    }
    const auto src = m.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= src[i];
  }
  return Mask(first.width(), first.height(), std::move(bits));
}

Mask intersection(const Mask& a, const Mask& b) {
  if (!a.same_dims(b.width(), b.height())) {
    throw Error(ErrorCode::DimensionMismatch, "intersection of masks with different dimensions");
  }
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = a.bits()[i] & b.bits()[i];
  return Mask(a.width(), a.height(), std::move(bits));
}

int disk_half_width(int radius, int dy) {
  if (std::abs(dy) > radius) return -1;
  const long long rem = static_cast<long long>(radius) * radius - static_cast<long long>(dy) * dy;
  auto dx = static_cast<long long>(std::sqrt(static_cast<double>(rem)));
  while (dx * dx > rem) --dx;
  while ((dx + 1) * (dx + 1) <= rem) ++dx;
  return static_cast<int>(dx);
}

Mask dilate(const Mask& m, int radius) {
  if (radius < 0) throw Error(ErrorCode::PreconditionViolation, "negative dilation radius");
  if (radius == 0 || m.size() == 0) return m;
  const int w = m.width();
  const int h = m.height();

  // prefix[y][x] = number of set bits in row y before column x
  std::vector<int> prefix(static_cast<std::size_t>(h) * static_cast<std::size_t>(w + 1), 0);
  for (int y = 0; y < h; ++y) {
    int* row = prefix.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1);
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (m.at(x, y) ? 1 : 0);
  }
  std::vector<int> half(static_cast<std::size_t>(2 * radius + 1));
  for (int dy = -radius; dy <= radius; ++dy) half[static_cast<std::size_t>(dy + radius)] = disk_half_width(radius, dy);

  Mask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool hit = false;
      for (int dy = -radius; dy <= radius && !hit; ++dy) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) continue;
        const int dx = half[static_cast<std::size_t>(dy + radius)];
        const int lo = std::max(0, x - dx);
        const int hi = std::min(w, x + dx + 1);
        const int* row = prefix.data() + static_cast<std::size_t>(sy) * static_cast<std::size_t>(w + 1);
        hit = row[hi] - row[lo] > 0;
      }
      if (hit) out.set(x, y, true);
    }
  }
  return out;
}

Mask rasterize_box(const BoundingBox& box, int width, int height) {
  const BoundingBox b = box.clamped(width, height);
  if (b.empty()) {
    throw Error(ErrorCode::EmptyBoxAfterClamp,
                "box (" + std::to_string(box.x0) + "," + std::to_string(box.y0) + ")-(" +
                    std::to_string(box.x1) + "," + std::to_string(box.y1) + ") is empty inside " +
                    std::to_string(width) + "x" + std::to_string(height));
  }
  Mask out(width, height);
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) out.set(x, y, true);
  }
  return out;
}

BoundingBox centered_box(int width, int height, double area_fraction) {
  const double side_scale = std::sqrt(area_fraction);
  const int bw = std::clamp(static_cast<int>(std::lround(width * side_scale)), 1, width);
  const int bh = std::clamp(static_cast<int>(std::lround(height * side_scale)), 1, height);
  const int x0 = (width - bw) / 2;
  const int y0 = (height - bh) / 2;
  return {x0, y0, x0 + bw, y0 + bh};
}

BoundingBox addition_heuristic_box(int width, int height, double area_fraction) {
  const double area = area_fraction * static_cast<double>(width) * static_cast<double>(height);
  const int side = std::clamp(static_cast<int>(std::lround(std::sqrt(area))), 1, std::min(width, height));
  const double cx = width / 2.0;
  const double cy = 0.62 * height;
  int x0 = static_cast<int>(std::floor(cx - side / 2.0 + 0.5));
  int y0 = static_cast<int>(std::floor(cy - side / 2.0 + 0.5));
  x0 = std::clamp(x0, 0, width - side);
  y0 = std::clamp(y0, 0, height - side);
  return {x0, y0, x0 + side, y0 + side};
}

int default_dilation_radius(int width, int height) {
  return std::max(8, static_cast<int>(std::lround(0.03 * std::min(width, height))));
}

}  // namespace iiie::mask

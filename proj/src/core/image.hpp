#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace iiie {

inline constexpr int kMaxImageSide = 8192;

using Bytes = std::vector<std::uint8_t>;
using Rgb = std::array<std::uint8_t, 3>;

// Row-major RGB8 raster. Immutable once built; construction enforces
// pixel count == width * height.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, Rgb fill = {0, 0, 0});
  ImageBuffer(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb value);

  std::span<const std::uint8_t> data() const noexcept { return rgb_; }
  std::span<std::uint8_t> data() noexcept { return rgb_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> rgb_;
};

// Binary raster, 1 = region the generator may change.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool value = false);
  Mask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)] != 0;
  }
  void set(int x, int y, bool value) {
    bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
          static_cast<std::size_t>(x)] = value ? 1 : 0;
  }

  std::size_t popcount() const noexcept;
  bool same_dims(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }

  // One byte per pixel, each 0 or 1.
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  long long area() const noexcept {
    return static_cast<long long>(width()) * static_cast<long long>(height());
  }
  bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }

  BoundingBox clamped(int width, int height) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// PNG or JPEG -> RGB8. Alpha is composited over white, gray expanded.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

// 8-bit RGB PNG, no alpha.
Bytes encode_image(const ImageBuffer& image);

// 8-bit grayscale PNG with values exactly 0 or 255.
Bytes encode_mask(const Mask& mask);

// Accepts any PNG/JPEG; a pixel is set iff its luminance is >= 128.
Mask decode_mask(std::span<const std::uint8_t> bytes);

// Nearest-neighbour resampling to the requested dimensions.
Mask resample_nearest(const Mask& mask, int width, int height);

Bytes read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace iiie

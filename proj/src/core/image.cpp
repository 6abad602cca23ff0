#include "core/image.hpp"

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "core/errors.hpp"

namespace iiie {

namespace fs = std::filesystem;

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::MalformedImage, "image has zero extent");
  }
  if (width > kMaxImageSide || height > kMaxImageSide) {
    throw Error(ErrorCode::OversizedImage,
                "image " + std::to_string(width) + "x" + std::to_string(height) +
                    " exceeds " + std::to_string(kMaxImageSide) + " px");
  }
}

bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

// Simplified libpng read; `format` is PNG_FORMAT_RGB or PNG_FORMAT_GRAY.
std::vector<std::uint8_t> read_png(std::span<const std::uint8_t> bytes, png_uint_32 format,
                                   int& width, int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::MalformedImage, "png: " + msg);
  }
  if (image.width > static_cast<png_uint_32>(kMaxImageSide) ||
      image.height > static_cast<png_uint_32>(kMaxImageSide)) {
    const int w = static_cast<int>(std::min<png_uint_32>(image.width, 1u << 30));
    const int h = static_cast<int>(std::min<png_uint_32>(image.height, 1u << 30));
    png_image_free(&image);
    check_dims(w, h);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  check_dims(width, height);

  image.format = format;
  std::vector<std::uint8_t> out(PNG_IMAGE_SIZE(image));
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&image, &white, out.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::MalformedImage, "png: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Non-local exit from libjpeg lands here; only POD locals live across setjmp.
ImageBuffer read_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> pixels;
  int width = 0;
  int height = 0;

  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::MalformedImage, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  width = static_cast<int>(cinfo.image_width);
  height = static_cast<int>(cinfo.image_height);
  if (width < 1 || height < 1 || width > kMaxImageSide || height > kMaxImageSide) {
    jpeg_destroy_decompress(&cinfo);
    check_dims(width, height);
  }
  if (cinfo.jpeg_color_space != JCS_GRAYSCALE && cinfo.jpeg_color_space != JCS_YCbCr &&
      cinfo.jpeg_color_space != JCS_RGB) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::MalformedImage, "jpeg: unsupported color space");
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) *
                                       static_cast<std::size_t>(width) * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return ImageBuffer(width, height, std::move(pixels));
}

Bytes write_png(const std::uint8_t* pixels, int width, int height, png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("png encode: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::PreconditionViolation, "negative image dimensions");
  }
  rgb_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    std::copy(fill.begin(), fill.end(), rgb_.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  if (width < 0 || height < 0 || rgb_.size() != pixel_count() * 3) {
    throw Error(ErrorCode::PreconditionViolation,
                "pixel data does not match " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

Rgb ImageBuffer::at(int x, int y) const {
  const std::size_t i =
      (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  return {rgb_[i], rgb_[i + 1], rgb_[i + 2]};
}

void ImageBuffer::set(int x, int y, Rgb value) {
  const std::size_t i =
      (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  rgb_[i] = value[0];
  rgb_[i + 1] = value[1];
  rgb_[i + 2] = value[2];
}

Mask::Mask(int width, int height, bool value)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            value ? 1 : 0) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::PreconditionViolation, "negative mask dimensions");
  }
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 0 || height < 0 ||
      bits_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::PreconditionViolation,
                "mask bits do not match " + std::to_string(width) + "x" + std::to_string(height));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BoundingBox BoundingBox::clamped(int width, int height) const {
  return {std::clamp(x0, 0, width), std::clamp(y0, 0, height), std::clamp(x1, 0, width),
          std::clamp(y1, 0, height)};
}

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) {
    int width = 0;
    int height = 0;
    auto rgb = read_png(bytes, PNG_FORMAT_RGB, width, height);
    return ImageBuffer(width, height, std::move(rgb));
  }
  if (is_jpeg(bytes)) return read_jpeg(bytes);
  throw Error(ErrorCode::MalformedImage, "not a PNG or JPEG stream");
}

Bytes encode_image(const ImageBuffer& image) {
  if (image.empty()) throw Error(ErrorCode::PreconditionViolation, "cannot encode empty image");
  return write_png(image.data().data(), image.width(), image.height(), PNG_FORMAT_RGB);
}

Bytes encode_mask(const Mask& mask) {
  if (mask.size() == 0) throw Error(ErrorCode::PreconditionViolation, "cannot encode empty mask");
  std::vector<std::uint8_t> gray(mask.size());
  std::transform(mask.bits().begin(), mask.bits().end(), gray.begin(),
                 [](std::uint8_t b) -> std::uint8_t { return b ? 255 : 0; });
  return write_png(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

Mask decode_mask(std::span<const std::uint8_t> bytes) {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> gray;
  if (is_png(bytes)) {
    gray = read_png(bytes, PNG_FORMAT_GRAY, width, height);
  } else {
    const ImageBuffer rgb = decode_image(bytes);
    width = rgb.width();
    height = rgb.height();
    gray.resize(rgb.pixel_count());
    const auto px = rgb.data();
    for (std::size_t i = 0; i < gray.size(); ++i) {
      gray[i] = static_cast<std::uint8_t>((299 * px[i * 3] + 587 * px[i * 3 + 1] + 114 * px[i * 3 + 2]) / 1000);
    }
  }
  for (auto& v : gray) v = v >= 128 ? 1 : 0;
  return Mask(width, height, std::move(gray));
}

Mask resample_nearest(const Mask& mask, int width, int height) {
  if (mask.same_dims(width, height)) return mask;
  if (mask.size() == 0) throw Error(ErrorCode::PreconditionViolation, "cannot resample empty mask");
  Mask out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>((static_cast<long long>(y) * 2 + 1) * mask.height() / (2LL * height));
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>((static_cast<long long>(x) * 2 + 1) * mask.width() / (2LL * width));
      out.set(x, y, mask.at(sx, sy));
    }
  }
  return out;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_file_atomic(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace iiie

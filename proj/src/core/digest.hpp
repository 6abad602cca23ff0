#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "core/image.hpp"

namespace iiie {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
Sha256 sha256(std::string_view text);
std::string to_hex(std::span<const std::uint8_t> bytes);

// Content digest of a decoded image: SHA-256 over the little-endian 32-bit
// width and height followed by the RGB bytes, first 16 hex characters.
// Independent of how the image was encoded on disk.
std::string image_digest(const ImageBuffer& image);

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws MalformedImage on invalid input; whitespace is not accepted.
Bytes base64_decode(std::string_view text);

}  // namespace iiie

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/image.hpp"

namespace iiie::backend {

// Structured-output schemas a chat request can ask for.
enum class SchemaId { Classification, ObjectExtraction, PromptBuild, BoxProposal };

std::string_view to_string(SchemaId id);
std::optional<SchemaId> schema_from_string(std::string_view name);

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::optional<ImageBuffer> image;
  SchemaId response_schema_id = SchemaId::Classification;
};

struct ChatResponse {
  std::string raw_text;
  std::string finish_status = "stop";
};

struct GroundRequest {
  ImageBuffer image;
  std::string phrase;
};

struct Detection {
  Mask mask;
  BoundingBox box;
  double confidence = 0.0;
};

struct GroundResponse {
  std::vector<Detection> detections;
};

struct InpaintRequest {
  ImageBuffer image;
  Mask mask;
  std::string prompt;
  std::int64_t seed = 0;
};

struct GlobalEditRequest {
  ImageBuffer image;
  std::string instruction;
  std::string target_prompt;
  std::int64_t seed = 0;
};

struct ImageResponse {
  ImageBuffer image;
};

// Endpoint paths, relative to a backend base URL.
inline constexpr std::string_view kChatPath = "/chat";
inline constexpr std::string_view kGroundPath = "/ground";
inline constexpr std::string_view kInpaintPath = "/inpaint";
inline constexpr std::string_view kGlobalEditPath = "/global-edit";

// Envelope <-> JSON. Decoders throw BackendContractViolation for a malformed
// envelope, including an image or mask field that does not decode.
nlohmann::json to_json(const ChatRequest& r);
nlohmann::json to_json(const ChatResponse& r);
nlohmann::json to_json(const GroundRequest& r);
nlohmann::json to_json(const GroundResponse& r);
nlohmann::json to_json(const InpaintRequest& r);
nlohmann::json to_json(const GlobalEditRequest& r);
nlohmann::json to_json(const ImageResponse& r);

ChatRequest chat_request_from_json(const nlohmann::json& j);
ChatResponse chat_response_from_json(const nlohmann::json& j);
GroundRequest ground_request_from_json(const nlohmann::json& j);
GroundResponse ground_response_from_json(const nlohmann::json& j);
InpaintRequest inpaint_request_from_json(const nlohmann::json& j);
GlobalEditRequest global_request_from_json(const nlohmann::json& j);
ImageResponse image_response_from_json(const nlohmann::json& j);

std::string encode_image_b64(const ImageBuffer& image);
std::string encode_mask_b64(const Mask& mask);
ImageBuffer decode_image_b64(std::string_view b64);
Mask decode_mask_b64(std::string_view b64);

// Response contract checks; throw BackendContractViolation.
void check_ground_response(const GroundRequest& request, const GroundResponse& response);
void check_image_response(const ImageBuffer& request_image, const ImageBuffer& response_image);

}  // namespace iiie::backend

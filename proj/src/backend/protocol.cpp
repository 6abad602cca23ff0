#include "backend/protocol.hpp"

#include <array>

#include "core/digest.hpp"
#include "core/errors.hpp"

namespace iiie::backend {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kSchemaNames{"classification", "object-extraction",
                                                       "prompt-build", "box-proposal"};

[[noreturn]] void contract(const std::string& message) {
  throw Error(ErrorCode::BackendContractViolation, message);
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) contract(std::string("envelope is missing '") + key + "'");
  return j.at(key);
}

std::string string_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) contract(std::string("envelope field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t int_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) contract(std::string("envelope field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

ImageBuffer image_field(const json& j, const char* key) {
  try {
    return decode_image_b64(string_field(j, key));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BackendContractViolation) throw;
    contract(std::string("envelope field '") + key + "' is not a PNG/JPEG payload: " + e.what());
  }
}

Mask mask_field(const json& j, const char* key) {
  try {
    return decode_mask_b64(string_field(j, key));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BackendContractViolation) throw;
    contract(std::string("envelope field '") + key + "' is not a PNG mask payload: " + e.what());
  }
}

json box_to_json(const BoundingBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BoundingBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) contract("box must be [x0, y0, x1, y1]");
  for (const auto& v : j) {
    if (!v.is_number_integer()) contract("box coordinates must be integers");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

std::string_view to_string(SchemaId id) { return kSchemaNames[static_cast<std::size_t>(id)]; }

std::optional<SchemaId> schema_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kSchemaNames.size(); ++i) {
    if (kSchemaNames[i] == name) return static_cast<SchemaId>(i);
  }
  return std::nullopt;
}

std::string encode_image_b64(const ImageBuffer& image) { return base64_encode(encode_image(image)); }
std::string encode_mask_b64(const Mask& mask) { return base64_encode(encode_mask(mask)); }
ImageBuffer decode_image_b64(std::string_view b64) { return decode_image(base64_decode(b64)); }
Mask decode_mask_b64(std::string_view b64) { return decode_mask(base64_decode(b64)); }

json to_json(const ChatRequest& r) {
  return {{"system_text", r.system_text},
          {"user_text", r.user_text},
          {"image", r.image ? json(encode_image_b64(*r.image)) : json(nullptr)},
          {"response_schema_id", to_string(r.response_schema_id)}};
}

json to_json(const ChatResponse& r) {
  return {{"raw_text", r.raw_text}, {"finish_status", r.finish_status}};
}

json to_json(const GroundRequest& r) {
  return {{"image", encode_image_b64(r.image)}, {"phrase", r.phrase}};
}

json to_json(const GroundResponse& r) {
  json detections = json::array();
  for (const auto& d : r.detections) {
    detections.push_back({{"mask", encode_mask_b64(d.mask)},
                          {"box", box_to_json(d.box)},
                          {"confidence", d.confidence}});
  }
  return {{"detections", detections}};
}

json to_json(const InpaintRequest& r) {
  return {{"image", encode_image_b64(r.image)},
          {"mask", encode_mask_b64(r.mask)},
          {"prompt", r.prompt},
          {"seed", r.seed}};
}

json to_json(const GlobalEditRequest& r) {
  return {{"image", encode_image_b64(r.image)},
          {"instruction", r.instruction},
          {"target_prompt", r.target_prompt},
          {"seed", r.seed}};
}

json to_json(const ImageResponse& r) { return {{"image", encode_image_b64(r.image)}}; }

ChatRequest chat_request_from_json(const json& j) {
  ChatRequest r;
  r.system_text = string_field(j, "system_text");
  r.user_text = string_field(j, "user_text");
  if (j.contains("image") && !j.at("image").is_null()) r.image = image_field(j, "image");
  const auto schema = schema_from_string(string_field(j, "response_schema_id"));
  if (!schema) contract("unknown response_schema_id");
  r.response_schema_id = *schema;
  return r;
}

ChatResponse chat_response_from_json(const json& j) {
  ChatResponse r;
  r.raw_text = string_field(j, "raw_text");
  if (j.contains("finish_status")) r.finish_status = string_field(j, "finish_status");
  return r;
}

GroundRequest ground_request_from_json(const json& j) {
  return {image_field(j, "image"), string_field(j, "phrase")};
}

GroundResponse ground_response_from_json(const json& j) {
  const json& list = field(j, "detections");
  if (!list.is_array()) contract("detections must be an array");
  GroundResponse r;
  for (const auto& d : list) {
    const json& conf = field(d, "confidence");
    if (!conf.is_number()) contract("confidence must be a number");
    r.detections.push_back(
        {mask_field(d, "mask"), box_from_json(field(d, "box")), conf.get<double>()});
  }
  return r;
}

InpaintRequest inpaint_request_from_json(const json& j) {
  return {image_field(j, "image"), mask_field(j, "mask"),
          string_field(j, "prompt"), int_field(j, "seed")};
}

GlobalEditRequest global_request_from_json(const json& j) {
  return {image_field(j, "image"), string_field(j, "instruction"),
          string_field(j, "target_prompt"), int_field(j, "seed")};
}

ImageResponse image_response_from_json(const json& j) {
  return {image_field(j, "image")};
}

void check_ground_response(const GroundRequest& request, const GroundResponse& response) {
  const int w = request.image.width();
  const int h = request.image.height();
  double previous = 1.0;
  for (const auto& d : response.detections) {
    if (!d.mask.same_dims(w, h)) {
      contract("detection mask is " + std::to_string(d.mask.width()) + "x" +
               std::to_string(d.mask.height()) + ", image is " + std::to_string(w) + "x" +
               std::to_string(h));
    }
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) contract("detection confidence outside [0,1]");
    if (d.confidence > previous) contract("detections are not sorted by descending confidence");
    previous = d.confidence;
  }
}

void check_image_response(const ImageBuffer& request_image, const ImageBuffer& response_image) {
  if (response_image.width() != request_image.width() ||
      response_image.height() != request_image.height()) {
    contract("backend returned " + std::to_string(response_image.width()) + "x" +
             std::to_string(response_image.height()) + " for a " +
             std::to_string(request_image.width()) + "x" + std::to_string(request_image.height()) +
             " request");
  }
}

}  // namespace iiie::backend

#include "backend/client.hpp"

#include <charconv>
#include <thread>

#include <httplib.h>

#include "core/errors.hpp"

namespace iiie::backend {

using nlohmann::json;

namespace {

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BackendContractViolation, std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace

Endpoint Endpoint::parse(const std::string& url) {
  constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme, 0) != 0) throw Error(ErrorCode::ConfigError, "endpoint must start with http://: " + url);
  std::string_view rest(url);
  rest.remove_prefix(kScheme.size());
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  std::string path = slash == std::string_view::npos ? "" : std::string(rest.substr(slash));
  while (!path.empty() && path.back() == '/') path.pop_back();

  Endpoint e;
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    e.host = std::string(authority);
    e.port = 80;
  } else {
    e.host = std::string(authority.substr(0, colon));
    const auto digits = authority.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), e.port);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || e.port <= 0 || e.port > 65535) {
      throw Error(ErrorCode::ConfigError, "bad port in endpoint " + url);
    }
  }
  if (e.host.empty()) throw Error(ErrorCode::ConfigError, "missing host in endpoint " + url);
  e.base_path = std::move(path);
  return e;
}

std::string Endpoint::url() const {
  return "http://" + host + ":" + std::to_string(port) + base_path;
}

HttpTransport::HttpTransport(Endpoint endpoint, RetryPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(std::move(policy)) {}

std::string HttpTransport::post(std::string_view path, const std::string& body) const {
  const std::string target = endpoint_.base_path + std::string(path);
  std::string last_failure;
  for (int attempt = 0; attempt < policy_.max_attempts(); ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(policy_.backoff[static_cast<std::size_t>(attempt - 1)]);

    httplib::Client client(endpoint_.host, endpoint_.port);
    client.set_connection_timeout(policy_.connect_timeout);
    client.set_read_timeout(policy_.read_timeout);
    client.set_write_timeout(policy_.read_timeout);
    auto result = client.Post(target, body, "application/json");
    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 200) return result->body;
    if (status == 503) {
      last_failure = "backend overloaded (503)";
      continue;
    }
    if (status == 422) {
      throw Error(ErrorCode::BackendContractViolation,
                  endpoint_.url() + std::string(path) + " rejected the envelope: " + result->body);
    }
    throw Error(ErrorCode::BackendRejected, endpoint_.url() + std::string(path) + " answered " +
                                                std::to_string(status) + ": " + result->body);
  }
  throw Error(ErrorCode::BackendUnreachable, endpoint_.url() + std::string(path) + " failed after " +
                                                 std::to_string(policy_.max_attempts()) +
                                                 " attempts: " + last_failure);
}

ChatResponse HttpChatClient::chat(const ChatRequest& request) {
  return chat_response_from_json(parse_body(transport_.post(kChatPath, to_json(request).dump())));
}

GroundResponse HttpGroundClient::ground(const GroundRequest& request) {
  GroundResponse response =
      ground_response_from_json(parse_body(transport_.post(kGroundPath, to_json(request).dump())));
  check_ground_response(request, response);
  return response;
}

ImageResponse HttpInpaintClient::inpaint(const InpaintRequest& request) {
  ImageResponse response =
      image_response_from_json(parse_body(transport_.post(kInpaintPath, to_json(request).dump())));
  check_image_response(request.image, response.image);
  return response;
}

ImageResponse HttpGlobalEditClient::global_edit(const GlobalEditRequest& request) {
  ImageResponse response =
      image_response_from_json(parse_body(transport_.post(kGlobalEditPath, to_json(request).dump())));
  check_image_response(request.image, response.image);
  return response;
}

Backends make_http_backends(const BackendUrls& urls, const RetryPolicy& policy) {
  return {std::make_shared<HttpChatClient>(Endpoint::parse(urls.chat), policy),
          std::make_shared<HttpGroundClient>(Endpoint::parse(urls.ground), policy),
          std::make_shared<HttpInpaintClient>(Endpoint::parse(urls.inpaint), policy),
          std::make_shared<HttpGlobalEditClient>(Endpoint::parse(urls.global_edit), policy)};
}

}  // namespace iiie::backend

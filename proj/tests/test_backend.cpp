#include <doctest.h>

#include <chrono>
#include <random>

#include "backend/client.hpp"
#include "backend/mocks.hpp"
#include "backend/protocol.hpp"
#include "backend/server.hpp"
#include "core/digest.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace iiie;
using namespace iiie::backend;
using testing::code_of;
using std::chrono::milliseconds;

namespace {

RetryPolicy fast_retry() {
  RetryPolicy p;
  p.backoff = {milliseconds(1), milliseconds(1), milliseconds(1)};
  p.connect_timeout = std::chrono::seconds(1);
  p.read_timeout = std::chrono::seconds(5);
  return p;
}

// Grounding backend that violates the contract on purpose.
class WrongSizeGround final : public GroundBackend {
 public:
  GroundResponse ground(const GroundRequest& r) override {
    return {{{Mask(r.image.width() + 1, r.image.height()), {0, 0, 1, 1}, 0.9}}};
  }
};

int unused_port() {
  BackendServer probe(Backends{}, {});
  probe.start();
  const int port = probe.port();
  probe.stop();
  return port;
}

}  // namespace

TEST_CASE("fill colour is the first three bytes of SHA-256 of the prompt") {
  const Sha256 d = sha256(std::string_view("a unicorn"));
  CHECK(fill_color("a unicorn") == Rgb{d[0], d[1], d[2]});
  CHECK(fill_color("a unicorn") == fill_color("a unicorn"));
}

TEST_CASE("inpaint mock paints exactly the masked pixels") {
  std::mt19937 rng(2);
  const ImageBuffer img = oracle::random_image(rng, 23, 17);
  const Mask m = oracle::random_mask(rng, 23, 17, 0.3);
  MockInpaint inpaint;
  const ImageBuffer out = inpaint.inpaint({img, m, "a unicorn", 7}).image;
  const Rgb fill = fill_color("a unicorn");
  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 23; ++x) CHECK(out.at(x, y) == (m.at(x, y) ? fill : img.at(x, y)));
  CHECK(out == inpaint.inpaint({img, m, "a unicorn", 7}).image);
  CHECK(code_of([&] { inpaint.inpaint({img, Mask(2, 2), "x", 0}); }) == ErrorCode::BackendContractViolation);
}

TEST_CASE("global mock changes every pixel deterministically") {
  std::mt19937 rng(4);
  const ImageBuffer img = oracle::random_image(rng, 16, 16);
  MockGlobalEdit global;
  const ImageBuffer a = global.global_edit({img, "winter", "the same scene in winter", 3}).image;
  const ImageBuffer b = global.global_edit({img, "winter", "the same scene in winter", 3}).image;
  CHECK(a == b);
  const GlobalTransform t = global_transform("the same scene in winter", 3);
  CHECK(t.shift >= 32);
  CHECK(t.shift < 224);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) CHECK(a.at(x, y) == t.apply(img.at(x, y)));
  // A nonzero shift can never leave a grey pixel unchanged.
  const ImageBuffer grey(4, 4, Rgb{90, 90, 90});
  const ImageBuffer g = global.global_edit({grey, "x", "y", 0}).image;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(g.at(x, y) != grey.at(x, y));
}

TEST_CASE("ground mock: fixture hit at 0.90, unknown phrase is a centred quarter box at 0.30") {
  auto suite = testing::mocks();
  const ImageBuffer horse = testing::horse();
  const GroundResponse hit = suite.ground->ground({horse, "horse"});
  REQUIRE(hit.detections.size() == 1);
  CHECK(hit.detections[0].confidence == doctest::Approx(0.90));
  CHECK(hit.detections[0].mask == testing::grounding_mask("horse"));

  const ImageBuffer plain(100, 100);
  const GroundResponse miss = suite.ground->ground({plain, "lamp"});
  REQUIRE(miss.detections.size() == 1);
  CHECK(miss.detections[0].confidence == doctest::Approx(0.30));
  CHECK(miss.detections[0].box == BoundingBox{25, 25, 75, 75});
  CHECK(miss.detections[0].mask.popcount() == 2500);
}

TEST_CASE("chat mock answers every schema with parseable JSON") {
  auto suite = testing::mocks();
  ChatRequest r;
  r.user_text = "Task: classify\nInstruction: make the horse into a unicorn";
  r.response_schema_id = SchemaId::Classification;
  CHECK(nlohmann::json::parse(suite.chat->chat(r).raw_text).at("category") == "LocalEdit");
  r.user_text = "Task: classify\nInstruction: something with no keywords at all";
  const auto fallback = nlohmann::json::parse(suite.chat->chat(r).raw_text);
  CHECK(fallback.at("confidence") == "low");
  CHECK(suite.chat->request_count() == 2);
}

TEST_CASE("helpers for prompt fields and nouns") {
  const auto fields = parse_prompt_fields("Task: extract-object\nMain object: the horse\nno colon here");
  CHECK(fields.at("task") == "extract-object");
  CHECK(fields.at("main_object") == "the horse");
  // Text without an Instruction line is the instruction itself.
  CHECK(fields.size() == 3);
  CHECK(fields.at("instruction").rfind("Task:", 0) == 0);
  CHECK(last_noun_like_token("make the horse into a unicorn") == "unicorn");
}

TEST_CASE("rule table rejects bad rules") {
  CHECK(code_of([] { ChatRuleTable::from_json(nlohmann::json{{"rules", {{{"schema", "nope"}, {"pattern", "x"}, {"response", nlohmann::json::object()}}}}}); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([] { ChatRuleTable::from_json(nlohmann::json{{"rules", {{{"schema", "classification"}, {"pattern", "("}, {"response", nlohmann::json::object()}}}}}); }) ==
        ErrorCode::ConfigError);
}

TEST_CASE("envelopes round trip through JSON") {
  std::mt19937 rng(8);
  const ImageBuffer img = oracle::random_image(rng, 9, 7);
  const Mask m = oracle::random_mask(rng, 9, 7, 0.5);

  const ChatRequest chat{"sys", "user", img, SchemaId::BoxProposal};
  const ChatRequest chat_back = chat_request_from_json(to_json(chat));
  CHECK(chat_back.user_text == "user");
  CHECK(chat_back.image == img);
  CHECK(chat_back.response_schema_id == SchemaId::BoxProposal);

  const InpaintRequest inpaint{img, m, "prompt", -42};
  const InpaintRequest inpaint_back = inpaint_request_from_json(to_json(inpaint));
  CHECK(inpaint_back.image == img);
  CHECK(inpaint_back.mask == m);
  CHECK(inpaint_back.seed == -42);

  const GroundResponse ground{{{m, {1, 2, 3, 4}, 0.75}}};
  const GroundResponse ground_back = ground_response_from_json(to_json(ground));
  CHECK(ground_back.detections.at(0).mask == m);
  CHECK(ground_back.detections.at(0).box == BoundingBox{1, 2, 3, 4});
  CHECK(to_json(GlobalEditRequest{img, "i", "t", 1}).at("target_prompt") == "t");

  nlohmann::json bad = to_json(inpaint);
  bad["image"] = "%%%";
  CHECK(code_of([&] { inpaint_request_from_json(bad); }) == ErrorCode::BackendContractViolation);
  CHECK(code_of([] { chat_request_from_json(nlohmann::json{{"user_text", 3}}); }) == ErrorCode::BackendContractViolation);
}

TEST_CASE("ground responses are checked against the contract") {
  const GroundRequest req{ImageBuffer(4, 4), "x"};
  CHECK_NOTHROW(check_ground_response(req, {{{Mask(4, 4), {0, 0, 1, 1}, 0.9}, {Mask(4, 4), {0, 0, 1, 1}, 0.4}}}));
  CHECK(code_of([&] { check_ground_response(req, {{{Mask(4, 4), {0, 0, 1, 1}, 0.4}, {Mask(4, 4), {0, 0, 1, 1}, 0.9}}}); }) ==
        ErrorCode::BackendContractViolation);
  CHECK(code_of([&] { check_ground_response(req, {{{Mask(5, 4), {0, 0, 1, 1}, 0.9}}}); }) ==
        ErrorCode::BackendContractViolation);
  CHECK(code_of([&] { check_ground_response(req, {{{Mask(4, 4), {0, 0, 1, 1}, 1.5}}}); }) ==
        ErrorCode::BackendContractViolation);
  CHECK(code_of([&] { check_image_response(ImageBuffer(4, 4), ImageBuffer(4, 5)); }) ==
        ErrorCode::BackendContractViolation);
}

TEST_CASE("endpoint parsing") {
  const Endpoint e = Endpoint::parse("http://127.0.0.1:7801/v2/");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 7801);
  CHECK(e.base_path == "/v2");
  CHECK(code_of([] { Endpoint::parse("ftp://x:1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { Endpoint::parse("http://host:notaport"); }) == ErrorCode::ConfigError);
}

TEST_CASE("loopback inpaint with an empty mask echoes the image byte for byte") {
  std::mt19937 rng(12);
  const ImageBuffer img = oracle::random_image(rng, 31, 29);
  MockServerSet servers(testing::mocks(), 0);
  const Backends http = make_http_backends(servers.urls(), fast_retry());
  CHECK(http.inpaint->inpaint({img, Mask(31, 29), "anything", 0}).image == img);

  const Mask m = oracle::random_mask(rng, 31, 29, 0.2);
  CHECK(http.inpaint->inpaint({img, m, "p", 0}).image == MockInpaint().inpaint({img, m, "p", 0}).image);
  CHECK(http.global_edit->global_edit({img, "i", "t", 5}).image ==
        MockGlobalEdit().global_edit({img, "i", "t", 5}).image);
  CHECK(http.ground->ground({testing::horse(), "horse"}).detections.at(0).mask == testing::grounding_mask("horse"));
  servers.stop();
}

TEST_CASE("503 is retried and then succeeds") {
  auto suite = testing::mocks();
  BackendServer server(Backends{nullptr, nullptr, suite.inpaint, nullptr}, {"127.0.0.1", 0, 3});
  server.start();
  HttpInpaintClient client(Endpoint::parse(server.url()), fast_retry());
  const ImageBuffer img(5, 5, Rgb{1, 2, 3});
  CHECK(client.inpaint({img, Mask(5, 5), "p", 0}).image == img);
  CHECK(server.requests_served() == 4);
  server.stop();
}

TEST_CASE("persistent 503 ends in BackendUnreachable after four attempts") {
  auto suite = testing::mocks();
  BackendServer server(Backends{nullptr, nullptr, suite.inpaint, nullptr}, {"127.0.0.1", 0, 100});
  server.start();
  HttpInpaintClient client(Endpoint::parse(server.url()), fast_retry());
  CHECK(code_of([&] { client.inpaint({ImageBuffer(2, 2), Mask(2, 2), "p", 0}); }) == ErrorCode::BackendUnreachable);
  CHECK(server.requests_served() == 4);
  server.stop();
}

TEST_CASE("connection refused ends in BackendUnreachable") {
  HttpChatClient client(Endpoint::parse("http://127.0.0.1:" + std::to_string(unused_port())), fast_retry());
  CHECK(code_of([&] { client.chat({"s", "u", std::nullopt, SchemaId::Classification}); }) ==
        ErrorCode::BackendUnreachable);
}

TEST_CASE("422 maps to BackendContractViolation without retry") {
  auto suite = testing::mocks();
  BackendServer server(Backends{nullptr, nullptr, suite.inpaint, nullptr}, {});
  server.start();
  HttpInpaintClient client(Endpoint::parse(server.url()), fast_retry());
  // The mock rejects a mask of the wrong size with 422.
  CHECK(code_of([&] { client.inpaint({ImageBuffer(4, 4), Mask(3, 3), "p", 0}); }) ==
        ErrorCode::BackendContractViolation);
  CHECK(server.requests_served() == 1);
  server.stop();
}

TEST_CASE("404 maps to BackendRejected") {
  BackendServer server(Backends{}, {});
  server.start();
  HttpInpaintClient client(Endpoint::parse(server.url()), fast_retry());
  CHECK(code_of([&] { client.inpaint({ImageBuffer(2, 2), Mask(2, 2), "p", 0}); }) == ErrorCode::BackendRejected);
  server.stop();
}

TEST_CASE("client rejects a ground response with the wrong mask size") {
  BackendServer server(Backends{nullptr, std::make_shared<WrongSizeGround>(), nullptr, nullptr}, {});
  server.start();
  HttpGroundClient client(Endpoint::parse(server.url()), fast_retry());
  CHECK(code_of([&] { client.ground({ImageBuffer(6, 6), "x"}); }) == ErrorCode::BackendContractViolation);
  server.stop();
}

TEST_CASE("binding a taken port is PortUnavailable") {
  BackendServer first(Backends{}, {});
  first.start();
  BackendServer second(Backends{}, {"127.0.0.1", first.port(), 0});
  CHECK(code_of([&] { second.start(); }) == ErrorCode::PortUnavailable);
  first.stop();
}

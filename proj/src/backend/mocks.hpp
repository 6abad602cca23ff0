#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "backend/client.hpp"

namespace iiie::backend {

// Flat colour the inpaint mock paints into masked pixels: the first three
// bytes of SHA-256(prompt).
Rgb fill_color(std::string_view prompt);

// Per-pixel transform applied by the global-edit mock: channel permutation
// chosen by the prompt/seed digest, then a nonzero intensity shift mod 256.
struct GlobalTransform {
  std::array<int, 3> permutation{0, 1, 2};
  std::uint8_t shift = 0;

  Rgb apply(Rgb px) const;
};
GlobalTransform global_transform(std::string_view prompt, std::int64_t seed);

// "Key: value" lines of a rendered prompt, keys lower-cased with spaces
// turned into underscores.
std::map<std::string, std::string> parse_prompt_fields(std::string_view user_text);

// Last token of the text that looks like a noun (alphabetic, three letters or
// more, not a stop word); empty when there is none.
std::string last_noun_like_token(std::string_view text);

struct ChatRule {
  SchemaId schema = SchemaId::Classification;
  std::string field = "instruction";  // prompt field the pattern runs against
  std::string pattern;                // ECMAScript, case-insensitive
  std::map<std::string, std::string> when;  // field -> regex that must match fully
  nlohmann::json response;                  // template; {1}..{9} and {field} substituted

  std::regex compiled;
  std::vector<std::pair<std::string, std::regex>> compiled_when;
};

// Ordered rule table; the first matching rule wins. Throws ConfigError on an
// invalid rule.
class ChatRuleTable {
 public:
  ChatRuleTable() = default;
  explicit ChatRuleTable(std::vector<ChatRule> rules);

  static ChatRuleTable from_json(const nlohmann::json& j);
  static ChatRuleTable load(const std::string& path);

  const std::vector<ChatRule>& rules() const { return rules_; }

 private:
  std::vector<ChatRule> rules_;
};

// Deterministic stand-in for the chat/vision model.
class MockChat final : public ChatBackend {
 public:
  explicit MockChat(ChatRuleTable rules) : rules_(std::move(rules)) {}
  ChatResponse chat(const ChatRequest& request) override;

  std::size_t request_count() const { return requests_.load(); }

 private:
  ChatRuleTable rules_;
  std::atomic<std::size_t> requests_{0};
};

// Fixture masks keyed by (image digest, phrase).
class GroundFixtures {
 public:
  void add(std::string image_digest, std::string phrase, Mask mask);
  const Mask* find(const std::string& image_digest, const std::string& phrase) const;
  std::size_t size() const { return masks_.size(); }

  // Loads every <image-digest>__<phrase>.png in `dir`; underscores in the
  // phrase part stand for spaces.
  static GroundFixtures load_dir(const std::string& dir);

 private:
  std::map<std::pair<std::string, std::string>, Mask> masks_;
};

inline constexpr double kFixtureConfidence = 0.90;
inline constexpr double kUnknownPhraseConfidence = 0.30;
inline constexpr double kUnknownPhraseAreaFraction = 0.25;

class MockGround final : public GroundBackend {
 public:
  explicit MockGround(GroundFixtures fixtures) : fixtures_(std::move(fixtures)) {}
  GroundResponse ground(const GroundRequest& request) override;

  std::size_t request_count() const { return requests_.load(); }

 private:
  GroundFixtures fixtures_;
  std::atomic<std::size_t> requests_{0};
};

class MockInpaint final : public InpaintBackend {
 public:
  ImageResponse inpaint(const InpaintRequest& request) override;
  std::size_t request_count() const { return requests_.load(); }

 private:
  std::atomic<std::size_t> requests_{0};
};

class MockGlobalEdit final : public GlobalEditBackend {
 public:
  ImageResponse global_edit(const GlobalEditRequest& request) override;
  std::size_t request_count() const { return requests_.load(); }

 private:
  std::atomic<std::size_t> requests_{0};
};

// One of each mock, kept concrete so tests can read request counters.
struct MockSuite {
  std::shared_ptr<MockChat> chat;
  std::shared_ptr<MockGround> ground;
  std::shared_ptr<MockInpaint> inpaint;
  std::shared_ptr<MockGlobalEdit> global_edit;

  static MockSuite make(ChatRuleTable rules, GroundFixtures fixtures);
  Backends backends() const { return {chat, ground, inpaint, global_edit}; }
};

// Rule table shipped with the mocks (the rules in config/mock_chat_rules.json
// are the same table in file form).
ChatRuleTable default_chat_rules();

}  // namespace iiie::backend

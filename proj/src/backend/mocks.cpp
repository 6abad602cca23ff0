#include "backend/mocks.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "core/digest.hpp"
#include "core/errors.hpp"
#include "core/plan.hpp"
#include "mask/mask_ops.hpp"
#include "embedded_config.hpp"

namespace iiie::backend {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr auto kRegexFlags = std::regex::ECMAScript | std::regex::icase;

const std::set<std::string>& stop_words() {
  static const std::set<std::string> words{
      "the",   "and",    "with",   "into",   "onto",  "from",  "for",    "its",    "his",
      "her",   "their",  "them",   "this",   "that",  "these", "those",  "make",   "turn",
      "change", "let",   "lets",   "let's",  "see",   "add",   "remove", "please", "more",
      "less",  "very",   "some",   "all",    "any",   "without", "within", "image", "picture",
      "photo", "it's",   "into",   "look",   "like",  "using", "can",    "you",    "your"};
  return words;
}

std::string clean_capture(std::string_view text) {
  std::string out = to_lower(trim(text));
  // collapse internal whitespace runs
  std::string collapsed;
  bool space = false;
  for (char c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !collapsed.empty()) collapsed.push_back(' ');
    space = false;
    collapsed.push_back(c);
  }
  return collapsed;
}

void substitute(std::string& text, const std::string& key, const std::string& value) {
  const std::string token = "{" + key + "}";
  for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size())) {
    text.replace(pos, token.size(), value);
  }
}

json render(const json& tmpl, const std::smatch& match, const std::map<std::string, std::string>& fields) {
  if (tmpl.is_string()) {
    std::string text = tmpl.get<std::string>();
    for (std::size_t i = 1; i < match.size() && i <= 9; ++i) {
      substitute(text, std::to_string(i), clean_capture(match[i].str()));
    }
    for (const auto& [key, value] : fields) substitute(text, key, value);
    return text;
  }
  if (tmpl.is_object()) {
    json out = json::object();
    for (const auto& [key, value] : tmpl.items()) out[key] = render(value, match, fields);
    return out;
  }
  if (tmpl.is_array()) {
    json out = json::array();
    for (const auto& value : tmpl) out.push_back(render(value, match, fields));
    return out;
  }
  return tmpl;
}

BoundingBox bounds_of(const Mask& m) {
  BoundingBox b{m.width(), m.height(), 0, 0};
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  if (b.empty()) return {0, 0, 0, 0};
  return b;
}

int field_int(const std::map<std::string, std::string>& fields, const std::string& key, int fallback) {
  const auto it = fields.find(key);
  if (it == fields.end()) return fallback;
  try {
    return std::max(1, std::stoi(it->second));
  } catch (const std::exception&) {
    return fallback;
  }
}

json default_reply(SchemaId schema, const std::map<std::string, std::string>& fields,
                   const std::optional<ImageBuffer>& image) {
  const auto get = [&fields](const std::string& key) {
    const auto it = fields.find(key);
    return it == fields.end() ? std::string() : it->second;
  };
  const std::string instruction = get("instruction");
  switch (schema) {
    case SchemaId::Classification:
      return {{"category", "LocalEdit"}, {"confidence", "low"}};
    case SchemaId::ObjectExtraction: {
      if (get("task") == "synonym") return {{"main_object", get("phrase")}, {"confidence", "low"}};
      const std::string category = get("category");
      const std::string noun = last_noun_like_token(instruction);
      const json phrase = noun.empty() ? json("main subject") : json(noun);
      if (category == "GlobalEdit") {
        return {{"main_object", nullptr}, {"addition_subject", nullptr}, {"confidence", "low"}};
      }
      if (category == "Addition") {
        return {{"main_object", nullptr}, {"addition_subject", phrase}, {"confidence", "low"}};
      }
      return {{"main_object", phrase}, {"addition_subject", nullptr}, {"confidence", "low"}};
    }
    case SchemaId::PromptBuild:
      return {{"target_prompt", instruction}, {"confidence", "low"}};
    case SchemaId::BoxProposal: {
      const int w = image ? image->width() : field_int(fields, "width", 512);
      const int h = image ? image->height() : field_int(fields, "height", 512);
      const BoundingBox b = mask::addition_heuristic_box(w, h, 0.25);
      return {{"box", json::array({b.x0, b.y0, b.x1, b.y1})}, {"confidence", "low"}};
    }
  }
  return json::object();
}

}  // namespace

Rgb fill_color(std::string_view prompt) {
  const Sha256 d = sha256(prompt);
  return {d[0], d[1], d[2]};
}

Rgb GlobalTransform::apply(Rgb px) const {
  Rgb out{};
  for (std::size_t c = 0; c < 3; ++c) {
    out[c] = static_cast<std::uint8_t>(px[static_cast<std::size_t>(permutation[c])] + shift);
  }
  return out;
}

GlobalTransform global_transform(std::string_view prompt, std::int64_t seed) {
  static constexpr std::array<std::array<int, 3>, 6> kPermutations{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  const Sha256 d = sha256(std::string(prompt) + "#" + std::to_string(seed));
  GlobalTransform t;
  t.permutation = kPermutations[d[0] % kPermutations.size()];
  t.shift = static_cast<std::uint8_t>(32 + d[1] % 192);
  return t;
}

std::map<std::string, std::string> parse_prompt_fields(std::string_view user_text) {
  std::map<std::string, std::string> fields;
  std::istringstream in{std::string(user_text)};
  for (std::string line; std::getline(in, line);) {
    const auto colon = line.find(':');
    if (colon == std::string::npos || colon == 0) continue;
    std::string key = to_lower(trim(std::string_view(line).substr(0, colon)));
    if (key.find_first_not_of("abcdefghijklmnopqrstuvwxyz ") != std::string::npos) continue;
    std::replace(key.begin(), key.end(), ' ', '_');
    fields.emplace(key, trim(std::string_view(line).substr(colon + 1)));
  }
  if (!fields.contains("instruction")) fields["instruction"] = trim(user_text);
  return fields;
}

std::string last_noun_like_token(std::string_view text) {
  std::string best;
  std::string word;
  const auto flush = [&] {
    if (word.size() >= 3 && !stop_words().contains(word)) best = word;
    word.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return best;
}

ChatRuleTable::ChatRuleTable(std::vector<ChatRule> rules) : rules_(std::move(rules)) {
  for (auto& rule : rules_) {
    try {
      rule.compiled = std::regex(rule.pattern.empty() ? std::string("[\\s\\S]*") : rule.pattern, kRegexFlags);
      rule.compiled_when.clear();
      for (const auto& [field, pattern] : rule.when) {
        rule.compiled_when.emplace_back(field, std::regex(pattern, kRegexFlags));
      }
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::ConfigError, "chat rule pattern '" + rule.pattern + "': " + e.what());
    }
    if (!rule.response.is_object() && !rule.response.is_string()) {
      throw Error(ErrorCode::ConfigError, "chat rule response must be an object or raw string");
    }
  }
}

ChatRuleTable ChatRuleTable::from_json(const json& j) {
  if (!j.is_object() || !j.contains("rules") || !j.at("rules").is_array()) {
    throw Error(ErrorCode::ConfigError, "rule table must be an object with a 'rules' array");
  }
  std::vector<ChatRule> rules;
  for (const auto& r : j.at("rules")) {
    ChatRule rule;
    if (!r.is_object() || !r.contains("schema") || !r.at("schema").is_string()) {
      throw Error(ErrorCode::ConfigError, "every chat rule needs a 'schema'");
    }
    const auto schema = schema_from_string(r.at("schema").get<std::string>());
    if (!schema) throw Error(ErrorCode::ConfigError, "unknown schema in chat rule: " + r.at("schema").dump());
    rule.schema = *schema;
    rule.field = r.value("field", std::string("instruction"));
    rule.pattern = r.value("pattern", std::string());
    if (r.contains("when")) {
      if (!r.at("when").is_object()) throw Error(ErrorCode::ConfigError, "'when' must be an object");
      for (const auto& [k, v] : r.at("when").items()) rule.when[k] = v.get<std::string>();
    }
    if (r.contains("raw")) {
      rule.response = r.at("raw").get<std::string>();
    } else if (r.contains("response")) {
      rule.response = r.at("response");
    } else {
      throw Error(ErrorCode::ConfigError, "chat rule needs 'response' or 'raw'");
    }
    rules.push_back(std::move(rule));
  }
  return ChatRuleTable(std::move(rules));
}

ChatRuleTable ChatRuleTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open rule table " + path);
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "rule table " + path + ": " + e.what());
  }
}

ChatResponse MockChat::chat(const ChatRequest& request) {
  ++requests_;
  const auto fields = parse_prompt_fields(request.user_text);
  for (const auto& rule : rules_.rules()) {
    if (rule.schema != request.response_schema_id) continue;
    const bool conditions_hold = std::all_of(
        rule.compiled_when.begin(), rule.compiled_when.end(), [&fields](const auto& cond) {
          const auto it = fields.find(cond.first);
          return it != fields.end() && std::regex_match(it->second, cond.second);
        });
    if (!conditions_hold) continue;
    const auto it = fields.find(rule.field);
    if (it == fields.end()) continue;
    std::smatch match;
    if (!std::regex_search(it->second, match, rule.compiled)) continue;
    if (rule.response.is_string()) return {rule.response.get<std::string>(), "stop"};
    json reply = render(rule.response, match, fields);
    if (!reply.contains("confidence")) reply["confidence"] = "high";
    return {reply.dump(), "stop"};
  }
  return {default_reply(request.response_schema_id, fields, request.image).dump(), "stop"};
}

void GroundFixtures::add(std::string image_digest, std::string phrase, Mask mask) {
  masks_.insert_or_assign({std::move(image_digest), clean_capture(phrase)}, std::move(mask));
}

const Mask* GroundFixtures::find(const std::string& image_digest, const std::string& phrase) const {
  const auto it = masks_.find({image_digest, clean_capture(phrase)});
  return it == masks_.end() ? nullptr : &it->second;
}

GroundFixtures GroundFixtures::load_dir(const std::string& dir) {
  GroundFixtures fixtures;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::ConfigError, "fixture directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string stem = path.stem().string();
    const auto sep = stem.find("__");
    if (sep == std::string::npos || sep == 0 || sep + 2 >= stem.size()) continue;
    std::string phrase = stem.substr(sep + 2);
    std::replace(phrase.begin(), phrase.end(), '_', ' ');
    fixtures.add(stem.substr(0, sep), phrase, decode_mask(read_file(path.string())));
  }
  return fixtures;
}

GroundResponse MockGround::ground(const GroundRequest& request) {
  ++requests_;
  const int w = request.image.width();
  const int h = request.image.height();
  GroundResponse response;
  if (const Mask* m = fixtures_.find(image_digest(request.image), request.phrase)) {
    Mask mask = resample_nearest(*m, w, h);
    const BoundingBox box = bounds_of(mask);
    response.detections.push_back({std::move(mask), box, kFixtureConfidence});
    return response;
  }
  const BoundingBox box = mask::centered_box(w, h, kUnknownPhraseAreaFraction);
  response.detections.push_back({mask::rasterize_box(box, w, h), box, kUnknownPhraseConfidence});
  return response;
}

ImageResponse MockInpaint::inpaint(const InpaintRequest& request) {
  ++requests_;
  if (!request.mask.same_dims(request.image.width(), request.image.height())) {
    throw Error(ErrorCode::BackendContractViolation, "inpaint mask does not match image dimensions");
  }
  const Rgb fill = fill_color(request.prompt);
  ImageBuffer out = request.image;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (request.mask.at(x, y)) out.set(x, y, fill);
    }
  }
  return {std::move(out)};
}

ImageResponse MockGlobalEdit::global_edit(const GlobalEditRequest& request) {
  ++requests_;
  const GlobalTransform t = global_transform(request.target_prompt, request.seed);
  ImageBuffer out = request.image;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out.set(x, y, t.apply(out.at(x, y)));
  }
  return {std::move(out)};
}

MockSuite MockSuite::make(ChatRuleTable rules, GroundFixtures fixtures) {
  return {std::make_shared<MockChat>(std::move(rules)), std::make_shared<MockGround>(std::move(fixtures)),
          std::make_shared<MockInpaint>(), std::make_shared<MockGlobalEdit>()};
}

ChatRuleTable default_chat_rules() {
  static const json table = json::parse(kDefaultChatRulesJson);
  return ChatRuleTable::from_json(table);
}

}  // namespace iiie::backend

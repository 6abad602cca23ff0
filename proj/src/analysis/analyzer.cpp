#include "analysis/analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

#include "core/errors.hpp"

namespace iiie::analysis {

using nlohmann::json;

namespace {

[[noreturn]] void unparseable(const std::string& message) {
  throw Error(ErrorCode::AnalysisUnparseable, message);
}

std::vector<std::string> words_of(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end && i < words.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += words[i];
  }
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return !needle.empty() && to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::optional<std::string> optional_phrase(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) unparseable(std::string("'") + key + "' must be a string or null");
  std::string phrase = normalize_phrase(j.at(key).get<std::string>());
  if (phrase.empty() || phrase == "none" || phrase == "null") return std::nullopt;
  if (word_count(phrase) > kMaxObjectWords) {
    unparseable(std::string("'") + key + "' has more than " + std::to_string(kMaxObjectWords) + " words");
  }
  return phrase;
}

// Lower-cased word tokens; a possessive "'s" is split off as its own token.
std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  const auto flush = [&] {
    if (word.empty()) return;
    if (word.size() > 2 && word.ends_with("'s")) {
      out.push_back(word.substr(0, word.size() - 2));
      out.emplace_back("'s");
    } else {
      out.push_back(word);
    }
    word.clear();
  };
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '\'') {
      word.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool in(const std::string& w, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

struct KeywordHit {
  EditCategory category;
  bool strong;
  std::size_t verb_index;  // token index of the matched keyword, or npos
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// First token index where `phrase` (space-separated) occurs.
std::size_t find_phrase(const std::vector<std::string>& tokens, std::string_view phrase) {
  const auto parts = words_of(phrase);
  if (parts.empty() || parts.size() > tokens.size()) return kNone;
  for (std::size_t i = 0; i + parts.size() <= tokens.size(); ++i) {
    if (std::equal(parts.begin(), parts.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) return i;
  }
  return kNone;
}

KeywordHit match_keywords(const std::vector<std::string>& tokens) {
  struct Table {
    EditCategory category;
    bool strong;
    std::vector<std::string_view> keys;
  };
  static const std::vector<Table> tables{
      {EditCategory::Remove, true,
       {"remove", "removing", "erase", "erasing", "delete", "deleting", "get rid of", "take away", "take out",
        "eliminate"}},
      {EditCategory::BackgroundEdit, true, {"background", "backdrop", "scenery"}},
      {EditCategory::Addition, true, {"add", "adding", "put", "place", "insert", "include"}},
      {EditCategory::GlobalEdit, true,
       {"see it in", "winter", "summer", "autumn", "snowy", "night", "style", "painting", "cartoon", "sketch",
        "watercolor", "anime", "entire image", "whole image"}},
      {EditCategory::LocalEdit, false,
       {"make", "change", "turn", "replace", "alter", "convert", "transform", "give", "color", "colour",
        "recolor", "smile"}},
  };
  for (const auto& table : tables) {
    std::size_t best = kNone;
    for (const auto key : table.keys) best = std::min(best, find_phrase(tokens, key));
    if (best != kNone) return {table.category, table.strong, best};
  }
  return {EditCategory::LocalEdit, false, kNone};
}

bool is_verb_token(const std::string& w) {
  return in(w, {"remove", "removing", "erase", "erasing", "delete", "deleting", "eliminate", "add", "adding",
                "put", "place", "insert", "include", "make", "change", "turn", "replace", "alter", "convert",
                "transform", "give", "color", "colour", "recolor", "get", "take"});
}

// Noun phrase after the verb at `start` (or the first verb when start is
// kNone): articles skipped, stops at a preposition or after a possessive.
std::string phrase_after_verb(const std::vector<std::string>& tokens, std::size_t start) {
  std::size_t i = start;
  if (i == kNone || i >= tokens.size() || !is_verb_token(tokens[i])) {
    i = 0;
    while (i < tokens.size() && !is_verb_token(tokens[i])) ++i;
  }
  if (i == tokens.size()) return {};
  ++i;
  if (i < tokens.size() && in(tokens[i], {"rid", "away", "out"})) ++i;
  if (i < tokens.size() && tokens[i] == "of") ++i;
  std::vector<std::string> phrase;
  for (; i < tokens.size() && phrase.size() < 4; ++i) {
    const std::string& w = tokens[i];
    if (phrase.empty() && in(w, {"the", "a", "an", "some", "all", "this", "that", "these", "those", "of"})) continue;
    if (in(w, {"into", "to", "with", "in", "on", "onto", "from", "within", "at", "near", "behind", "beside",
               "without", "by", "for", "and", "so", "as", "next", "above", "below", "under", "look"})) {
      break;
    }
    if (w == "'s") break;
    phrase.push_back(w);
  }
  if (!phrase.empty() && in(phrase.front(), {"it", "them", "him", "her", "me", "us"})) return "main subject";
  return join(phrase, 0, phrase.size());
}

std::string text_after(std::string_view instruction, std::initializer_list<std::string_view> markers) {
  const std::string lower = to_lower(instruction);
  for (const auto marker : markers) {
    const std::string key = " " + std::string(marker) + " ";
    const auto pos = lower.find(key);
    if (pos != std::string::npos) {
      std::string rest = trim(std::string_view(instruction).substr(pos + key.size()));
      while (!rest.empty() && (rest.back() == '.' || rest.back() == '!')) rest.pop_back();
      if (!rest.empty()) return rest;
    }
  }
  return {};
}

constexpr std::string_view kRemovalPrompt = "empty background, seamless continuation of the surrounding scene";

}  // namespace

std::string_view to_string(Confidence c) { return c == Confidence::High ? "high" : "low"; }
std::string_view to_string(Provenance p) { return p == Provenance::Llm ? "llm" : "fallback"; }

EditPlan AnalysisRecord::to_plan() const {
  return {category, main_object, addition_subject, target_prompt, mask_source_for(category)};
}

json to_json(const AnalysisRecord& r) {
  return {{"category", to_string(r.category)},
          {"main_object", r.main_object ? json(*r.main_object) : json(nullptr)},
          {"addition_subject", r.addition_subject ? json(*r.addition_subject) : json(nullptr)},
          {"target_prompt", r.target_prompt},
          {"confidence", to_string(r.confidence)},
          {"provenance", to_string(r.provenance)}};
}

std::string normalize_phrase(std::string_view phrase) {
  std::string text = to_lower(trim(phrase));
  while (!text.empty() && std::ispunct(static_cast<unsigned char>(text.back()))) text.pop_back();
  auto words = words_of(text);
  if (!words.empty() && in(words.front(), {"the", "a", "an"})) words.erase(words.begin());
  return join(words, 0, words.size());
}

json extract_json_object(std::string_view raw_text) {
  const auto open = raw_text.find('{');
  const auto close = raw_text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    unparseable("reply contains no JSON object");
  }
  try {
    json j = json::parse(raw_text.substr(open, close - open + 1));
    if (!j.is_object()) unparseable("reply is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    unparseable(std::string("reply is not valid JSON: ") + e.what());
  }
}

InstructionAnalyzer::InstructionAnalyzer(std::shared_ptr<backend::ChatBackend> chat,
                                         const PromptTemplateSet& templates)
    : chat_(std::move(chat)), templates_(templates) {}

template <typename T, typename Parse>
T InstructionAnalyzer::ask(const std::string& template_name, const TemplateVars& vars,
                           const std::optional<ImageBuffer>& image, Parse parse) const {
  backend::ChatRequest request = templates_.render(template_name, vars);
  request.image = image;
  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) {
      request.user_text += "\n\nCorrection: your previous reply was rejected (" + problem +
                           "). Reply again with JSON only.";
    }
    const backend::ChatResponse reply = chat_->chat(request);
    try {
      return parse(extract_json_object(reply.raw_text));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AnalysisUnparseable) throw;
      problem = e.what();
    } catch (const json::exception& e) {
      problem = e.what();
    }
  }
  unparseable(template_name + " reply was invalid twice: " + problem);
}

InstructionAnalyzer::Classification InstructionAnalyzer::classify(const std::string& instruction) const {
  const std::string text = normalized_instruction(instruction);
  return ask<Classification>("classification", {{"instruction", text}}, std::nullopt, [](const json& j) {
    if (!j.contains("category") || !j.at("category").is_string()) unparseable("'category' missing");
    const auto category = category_from_string(j.at("category").get<std::string>());
    if (!category) unparseable("'category' is not one of the five edit categories");
    const bool low = j.contains("confidence") && j.at("confidence") == "low";
    return Classification{*category, low ? Confidence::Low : Confidence::High};
  });
}

ObjectPhrases InstructionAnalyzer::extract_objects(const std::string& instruction, EditCategory category) const {
  if (category == EditCategory::GlobalEdit) return {};
  const std::string text = normalized_instruction(instruction);
  return ask<ObjectPhrases>(
      "object-extraction", {{"instruction", text}, {"category", std::string(to_string(category))}}, std::nullopt,
      [category](const json& j) {
        ObjectPhrases out;
        if (category == EditCategory::Addition) {
          out.addition_subject = optional_phrase(j, "addition_subject");
          if (!out.addition_subject) unparseable("Addition needs 'addition_subject'");
        } else {
          out.main_object = optional_phrase(j, "main_object");
          if (!out.main_object) unparseable(std::string(to_string(category)) + " needs 'main_object'");
        }
        return out;
      });
}

std::string InstructionAnalyzer::build_target_prompt(const std::string& instruction, EditCategory category,
                                                     const ObjectPhrases& objects) const {
  const std::string text = normalized_instruction(instruction);
  const TemplateVars vars{{"instruction", text},
                          {"category", std::string(to_string(category))},
                          {"main_object", objects.main_object.value_or("none")},
                          {"addition_subject", objects.addition_subject.value_or("none")}};
  return ask<std::string>("prompt-build", vars, std::nullopt, [&](const json& j) {
    if (!j.contains("target_prompt") || !j.at("target_prompt").is_string()) unparseable("'target_prompt' missing");
    std::string prompt = trim(j.at("target_prompt").get<std::string>());
    if (prompt.empty()) unparseable("'target_prompt' is empty");
    if (word_count(prompt) > kMaxPromptWords) {
      unparseable("'target_prompt' exceeds " + std::to_string(kMaxPromptWords) + " words");
    }
    if (category == EditCategory::Remove && objects.main_object && contains_ci(prompt, *objects.main_object)) {
      unparseable("removal prompt names the removed object");
    }
    return prompt;
  });
}

std::optional<std::string> InstructionAnalyzer::suggest_synonym(const std::string& instruction,
                                                                EditCategory category,
                                                                const std::string& phrase) const {
  const TemplateVars vars{{"instruction", normalized_instruction(instruction)},
                          {"category", std::string(to_string(category))},
                          {"phrase", phrase}};
  return ask<std::optional<std::string>>("synonym", vars, std::nullopt,
                                         [&phrase](const json& j) -> std::optional<std::string> {
                                           auto alt = optional_phrase(j, "main_object");
                                           if (alt && *alt == normalize_phrase(phrase)) return std::nullopt;
                                           return alt;
                                         });
}

BoundingBox InstructionAnalyzer::propose_box(const std::string& instruction, const std::string& addition_subject,
                                             const ImageBuffer& image) const {
  const TemplateVars vars{{"instruction", normalized_instruction(instruction)},
                          {"addition_subject", addition_subject},
                          {"width", std::to_string(image.width())},
                          {"height", std::to_string(image.height())}};
  return ask<BoundingBox>("box-proposal", vars, image, [](const json& j) {
    if (!j.contains("box") || !j.at("box").is_array() || j.at("box").size() != 4) {
      unparseable("'box' must be [x0, y0, x1, y1]");
    }
    const json& b = j.at("box");
    for (const auto& v : b) {
      if (!v.is_number()) unparseable("box coordinates must be numbers");
    }
    const auto coord = [](const json& v) { return static_cast<int>(std::lround(v.get<double>())); };
    return BoundingBox{coord(b[0]), coord(b[1]), coord(b[2]), coord(b[3])};
  });
}

AnalysisRecord InstructionAnalyzer::analyze(const std::string& instruction) const {
  const Classification c = classify(instruction);
  const ObjectPhrases objects = extract_objects(instruction, c.category);
  AnalysisRecord record;
  record.category = c.category;
  record.main_object = objects.main_object;
  record.addition_subject = objects.addition_subject;
  record.target_prompt = build_target_prompt(instruction, c.category, objects);
  record.confidence = c.confidence;
  record.provenance = Provenance::Llm;
  return record;
}

AnalysisRecord fallback_classify(std::string_view instruction, std::optional<EditCategory> forced) {
  const std::string text = normalized_instruction(instruction);
  const auto tokens = tokenize(text);
  const KeywordHit hit = match_keywords(tokens);

  AnalysisRecord r;
  r.category = forced.value_or(hit.category);
  r.confidence = forced || hit.strong ? Confidence::High : Confidence::Low;
  r.provenance = Provenance::Fallback;

  const auto noun_or = [&tokens](std::string fallback) {
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
      if (it->size() >= 3 && !is_verb_token(*it) && !in(*it, {"the", "and", "with", "into", "image", "images"})) {
        return *it;
      }
    }
    return fallback;
  };

  switch (r.category) {
    case EditCategory::Remove: {
      std::string object = phrase_after_verb(tokens, hit.verb_index);
      r.main_object = object.empty() ? noun_or("object") : object;
      r.target_prompt = std::string(kRemovalPrompt);
      break;
    }
    case EditCategory::Addition: {
      std::string subject = phrase_after_verb(tokens, hit.verb_index);
      r.addition_subject = subject.empty() ? noun_or("object") : subject;
      r.target_prompt = *r.addition_subject;
      break;
    }
    case EditCategory::BackgroundEdit: {
      std::string subject = text_after(text, {"behind the", "around the", "behind", "around"});
      r.main_object = subject.empty() ? std::string("main subject") : normalize_phrase(subject);
      std::string target = text_after(text, {"background to", "background into", "background with"});
      r.target_prompt = target.empty() ? text : target;
      break;
    }
    case EditCategory::GlobalEdit: {
      const std::string scene = text_after(text, {"see it in"});
      const std::string target = text_after(text, {"into", "to"});
      if (!scene.empty()) {
        r.target_prompt = "the same scene in " + scene;
      } else {
        r.target_prompt = target.empty() ? text : target;
      }
      break;
    }
    case EditCategory::LocalEdit: {
      std::string object = phrase_after_verb(tokens, hit.verb_index);
      r.main_object = object.empty() ? noun_or("main subject") : object;
      std::string target = text_after(text, {"into", "to"});
      r.target_prompt = target.empty() ? text : target;
      break;
    }
  }
  if (r.main_object) r.main_object = normalize_phrase(*r.main_object);
  if (r.addition_subject) r.addition_subject = normalize_phrase(*r.addition_subject);
  return r;
}

}  // namespace iiie::analysis

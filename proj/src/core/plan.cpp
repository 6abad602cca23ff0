#include "core/plan.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "core/errors.hpp"

namespace iiie {

namespace {

constexpr std::array<std::string_view, 5> kCategoryNames{"LocalEdit", "BackgroundEdit",
                                                         "GlobalEdit", "Addition", "Remove"};
constexpr std::array<std::string_view, 4> kSourceNames{"GroundedObject", "BackgroundComplement",
                                                       "AdditionBox", "WholeImage"};

bool blank(const std::optional<std::string>& s) { return !s || trim(*s).empty(); }

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) {
    throw Error(ErrorCode::InvalidPlan, std::string("plan field '") + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

std::string_view to_string(EditCategory category) {
  return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<EditCategory> category_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<EditCategory>(i);
  }
  return std::nullopt;
}

std::string_view to_string(MaskSource source) {
  return kSourceNames[static_cast<std::size_t>(source)];
}

std::optional<MaskSource> mask_source_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == name) return static_cast<MaskSource>(i);
  }
  return std::nullopt;
}

MaskSource mask_source_for(EditCategory category) {
  switch (category) {
    case EditCategory::LocalEdit:
    case EditCategory::Remove:
      return MaskSource::GroundedObject;
    case EditCategory::BackgroundEdit:
      return MaskSource::BackgroundComplement;
    case EditCategory::Addition:
      return MaskSource::AdditionBox;
    case EditCategory::GlobalEdit:
      return MaskSource::WholeImage;
  }
  return MaskSource::WholeImage;
}

std::string trim(std::string_view text) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto begin = std::find_if_not(text.begin(), text.end(), is_space);
  auto end = std::find_if_not(text.rbegin(), std::make_reverse_iterator(begin), is_space).base();
  return std::string(begin, end);
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(
      text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::size_t word_count(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  for (std::string word; in >> word;) ++n;
  return n;
}

std::string normalized_instruction(std::string_view instruction) {
  std::string text = trim(instruction);
  const std::size_t n = utf8_length(text);
  if (n == 0) throw Error(ErrorCode::PreconditionViolation, "instruction is empty");
  if (n > static_cast<std::size_t>(kMaxInstructionChars)) {
    throw Error(ErrorCode::PreconditionViolation,
                "instruction has " + std::to_string(n) + " characters, limit is " +
                    std::to_string(kMaxInstructionChars));
  }
  return text;
}

std::vector<PlanViolation> validate_plan(const EditPlan& plan) {
  std::vector<PlanViolation> out;
  const auto add = [&out](std::string field, std::string message) {
    out.push_back({std::move(field), std::move(message)});
  };
  const std::string cat(to_string(plan.category));

  if (trim(plan.target_prompt).empty()) add("target_prompt", "target prompt must be nonempty");

  switch (plan.category) {
    case EditCategory::GlobalEdit:
      if (!blank(plan.main_object)) add("main_object", "GlobalEdit must leave main_object absent");
      if (!blank(plan.addition_subject)) {
        add("addition_subject", "addition_subject is only allowed for Addition");
      }
      break;
    case EditCategory::Addition:
      if (!blank(plan.main_object)) add("main_object", "Addition must leave main_object absent");
      if (blank(plan.addition_subject)) add("addition_subject", "Addition requires addition_subject");
      break;
    case EditCategory::LocalEdit:
    case EditCategory::Remove:
    case EditCategory::BackgroundEdit:
      if (blank(plan.main_object)) add("main_object", cat + " requires main_object");
      if (!blank(plan.addition_subject)) {
        add("addition_subject", "addition_subject is only allowed for Addition");
      }
      break;
  }

  const MaskSource expected = mask_source_for(plan.category);
  if (plan.mask_source != expected) {
    add("mask_source", cat + " requires mask_source " + std::string(to_string(expected)) +
                           ", got " + std::string(to_string(plan.mask_source)));
  }
  return out;
}

nlohmann::json plan_to_json(const EditPlan& plan) {
  nlohmann::json j;
  j["schema_version"] = kPlanSchemaVersion;
  j["category"] = to_string(plan.category);
  j["main_object"] = plan.main_object ? nlohmann::json(*plan.main_object) : nlohmann::json(nullptr);
  j["addition_subject"] =
      plan.addition_subject ? nlohmann::json(*plan.addition_subject) : nlohmann::json(nullptr);
  j["target_prompt"] = plan.target_prompt;
  j["mask_source"] = to_string(plan.mask_source);
  return j;
}

EditPlan plan_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidPlan, "plan must be a JSON object");
  if (j.contains("schema_version") && j.at("schema_version") != kPlanSchemaVersion) {
    throw Error(ErrorCode::InvalidPlan, "unsupported plan schema_version");
  }
  EditPlan plan;
  const auto category = optional_string(j, "category");
  if (!category || !category_from_string(*category)) {
    throw Error(ErrorCode::InvalidPlan, "plan category missing or unknown");
  }
  plan.category = *category_from_string(*category);
  plan.main_object = optional_string(j, "main_object");
  plan.addition_subject = optional_string(j, "addition_subject");
  plan.target_prompt = optional_string(j, "target_prompt").value_or("");
  const auto source = optional_string(j, "mask_source");
  if (source) {
    const auto parsed = mask_source_from_string(*source);
    if (!parsed) throw Error(ErrorCode::InvalidPlan, "unknown mask_source '" + *source + "'");
    plan.mask_source = *parsed;
  } else {
    plan.mask_source = mask_source_for(plan.category);
  }
  return plan;
}

}  // namespace iiie

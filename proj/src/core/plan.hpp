#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/image.hpp"

namespace iiie {

enum class EditCategory { LocalEdit, BackgroundEdit, GlobalEdit, Addition, Remove };

inline constexpr std::array<EditCategory, 5> kAllCategories{
    EditCategory::LocalEdit, EditCategory::BackgroundEdit, EditCategory::GlobalEdit,
    EditCategory::Addition, EditCategory::Remove};

std::string_view to_string(EditCategory category);
std::optional<EditCategory> category_from_string(std::string_view name);

// Where the step-3 mask comes from.
enum class MaskSource { GroundedObject, BackgroundComplement, AdditionBox, WholeImage };

std::string_view to_string(MaskSource source);
std::optional<MaskSource> mask_source_from_string(std::string_view name);

// The only mask source consistent with a category.
MaskSource mask_source_for(EditCategory category);

inline constexpr int kMaxInstructionChars = 2000;

struct EditRequest {
  std::string id;
  ImageBuffer image;
  std::string instruction;
};

// Trims and checks the [1, 2000] character bound (counted in UTF-8 code
// points). Throws PreconditionViolation.
std::string normalized_instruction(std::string_view instruction);

// The intermediary guidance handed from the language side to the generator.
struct EditPlan {
  EditCategory category = EditCategory::LocalEdit;
  std::optional<std::string> main_object;
  std::optional<std::string> addition_subject;
  std::string target_prompt;
  MaskSource mask_source = MaskSource::GroundedObject;

  friend bool operator==(const EditPlan&, const EditPlan&) = default;
};

struct PlanViolation {
  std::string field;
  std::string message;
};

// Every broken category/field rule; empty iff the plan is consistent.
std::vector<PlanViolation> validate_plan(const EditPlan& plan);

inline constexpr int kPlanSchemaVersion = 1;

nlohmann::json plan_to_json(const EditPlan& plan);
// Throws InvalidPlan on unknown names or wrong field types.
EditPlan plan_from_json(const nlohmann::json& j);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
std::size_t utf8_length(std::string_view text);
std::size_t word_count(std::string_view text);

}  // namespace iiie

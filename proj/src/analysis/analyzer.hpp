#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "analysis/templates.hpp"
#include "backend/client.hpp"
#include "core/plan.hpp"

namespace iiie::analysis {

enum class Confidence { High, Low };
enum class Provenance { Llm, Fallback };

std::string_view to_string(Confidence c);
std::string_view to_string(Provenance p);

struct ObjectPhrases {
  std::optional<std::string> main_object;
  std::optional<std::string> addition_subject;
};

// Steps 1-2 plus the target prompt, before the mask exists.
struct AnalysisRecord {
  EditCategory category = EditCategory::LocalEdit;
  std::optional<std::string> main_object;
  std::optional<std::string> addition_subject;
  std::string target_prompt;
  Confidence confidence = Confidence::Low;
  Provenance provenance = Provenance::Llm;

  EditPlan to_plan() const;
};

nlohmann::json to_json(const AnalysisRecord& record);

inline constexpr std::size_t kMaxObjectWords = 6;
inline constexpr std::size_t kMaxPromptWords = 75;

// Lower-cases, collapses whitespace and drops a leading article.
std::string normalize_phrase(std::string_view phrase);

// Talks to the chat backend one schema at a time. Every reply is parsed and
// validated; an invalid reply is answered with one corrective re-ask and a
// second invalid reply raises AnalysisUnparseable.
class InstructionAnalyzer {
 public:
  InstructionAnalyzer(std::shared_ptr<backend::ChatBackend> chat, const PromptTemplateSet& templates);

  struct Classification {
    EditCategory category;
    Confidence confidence;
  };

  Classification classify(const std::string& instruction) const;
  ObjectPhrases extract_objects(const std::string& instruction, EditCategory category) const;
  std::string build_target_prompt(const std::string& instruction, EditCategory category,
                                  const ObjectPhrases& objects) const;
  // A different phrase for the same object, or nullopt when the backend has
  // none to offer.
  std::optional<std::string> suggest_synonym(const std::string& instruction, EditCategory category,
                                             const std::string& phrase) const;
  // Box proposal for an Addition; the image is attached to the request.
  BoundingBox propose_box(const std::string& instruction, const std::string& addition_subject,
                          const ImageBuffer& image) const;

  AnalysisRecord analyze(const std::string& instruction) const;

 private:
  template <typename T, typename Parse>
  T ask(const std::string& template_name, const TemplateVars& vars, const std::optional<ImageBuffer>& image,
        Parse parse) const;

  std::shared_ptr<backend::ChatBackend> chat_;
  const PromptTemplateSet& templates_;
};

// Keyword heuristic covering all five categories; needs no backend. With
// `forced` set, only the object and prompt rules run for that category.
AnalysisRecord fallback_classify(std::string_view instruction, std::optional<EditCategory> forced = std::nullopt);

// Pulls the JSON object out of a model reply, tolerating code fences and
// surrounding prose. Throws AnalysisUnparseable.
nlohmann::json extract_json_object(std::string_view raw_text);

}  // namespace iiie::analysis

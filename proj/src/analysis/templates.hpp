#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "backend/protocol.hpp"

namespace iiie::analysis {

struct PromptTemplate {
  std::string name;
  backend::SchemaId schema = backend::SchemaId::Classification;
  std::string system_text;
  std::string user_text;
  std::set<std::string> placeholders;  // names used in either text
};

using TemplateVars = std::map<std::string, std::string>;

// Named chat templates: classification, object-extraction, prompt-build,
// box-proposal and synonym.
class PromptTemplateSet {
 public:
  static PromptTemplateSet parse(std::string_view text);
  static PromptTemplateSet load(const std::string& path);
  // The set compiled in from config/prompt_templates.txt.
  static const PromptTemplateSet& builtin();

  const PromptTemplate& at(const std::string& name) const;
  int version() const { return version_; }

  // Fills both texts; throws TemplateError when a placeholder has no value.
  backend::ChatRequest render(const std::string& name, const TemplateVars& vars) const;

 private:
  int version_ = 0;
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace iiie::analysis

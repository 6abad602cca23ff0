#include "analysis/templates.hpp"

#include <array>
#include <fstream>
#include <regex>
#include <sstream>

#include "core/errors.hpp"
#include "core/plan.hpp"
#include "embedded_config.hpp"

namespace iiie::analysis {

namespace {

constexpr std::array<std::string_view, 5> kRequired{"classification", "object-extraction", "prompt-build",
                                                    "box-proposal", "synonym"};

const std::regex& placeholder_regex() {
  static const std::regex re(R"(\{([a-z_]+)\})");
  return re;
}

std::set<std::string> placeholders_in(const std::string& text) {
  std::set<std::string> out;
  for (std::sregex_iterator it(text.begin(), text.end(), placeholder_regex()), end; it != end; ++it) {
    out.insert((*it)[1].str());
  }
  return out;
}

std::string fill(const std::string& text, const TemplateVars& vars, const std::string& name) {
  std::string out;
  std::size_t last = 0;
  for (std::sregex_iterator it(text.begin(), text.end(), placeholder_regex()), end; it != end; ++it) {
    const std::string key = (*it)[1].str();
    const auto value = vars.find(key);
    if (value == vars.end()) {
      throw Error(ErrorCode::TemplateError, "template '" + name + "' needs a value for {" + key + "}");
    }
    out.append(text, last, static_cast<std::size_t>(it->position()) - last);
    out.append(value->second);
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(text, last, std::string::npos);
  return out;
}

void strip_trailing_blank_lines(std::string& body) {
  while (!body.empty() && (body.back() == '\n' || body.back() == ' ' || body.back() == '\t')) body.pop_back();
}

}  // namespace

PromptTemplateSet PromptTemplateSet::parse(std::string_view text) {
  PromptTemplateSet set;
  std::map<std::string, std::string> sections;
  std::string current;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      if (sections.contains(current)) throw Error(ErrorCode::TemplateError, "duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    if (current.empty()) {
      const std::string t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq != std::string::npos && trim(t.substr(0, eq)) == "version") {
        try {
          set.version_ = std::stoi(trim(t.substr(eq + 1)));
        } catch (const std::exception&) {
          throw Error(ErrorCode::TemplateError, "bad template file version: " + t);
        }
        continue;
      }
      throw Error(ErrorCode::TemplateError, "unexpected line before first section: " + t);
    }
    sections[current] += line + "\n";
  }
  if (set.version_ != 1) throw Error(ErrorCode::TemplateError, "unsupported template file version");

  for (auto& [key, body] : sections) {
    strip_trailing_blank_lines(body);
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) throw Error(ErrorCode::TemplateError, "section [" + key + "] needs a .part suffix");
    const std::string name = key.substr(0, dot);
    const std::string part = key.substr(dot + 1);
    PromptTemplate& t = set.templates_[name];
    t.name = name;
    if (part == "system") {
      t.system_text = body;
    } else if (part == "user") {
      t.user_text = body;
    } else if (part != "schema") {
      throw Error(ErrorCode::TemplateError, "unknown section part [" + key + "]");
    }
  }
  for (auto& [name, t] : set.templates_) {
    const auto schema_key = sections.find(name + ".schema");
    const std::string schema_name = schema_key == sections.end() ? name : trim(schema_key->second);
    const auto schema = backend::schema_from_string(schema_name);
    if (!schema) throw Error(ErrorCode::TemplateError, "template '" + name + "' has unknown schema " + schema_name);
    t.schema = *schema;
    if (t.user_text.empty()) throw Error(ErrorCode::TemplateError, "template '" + name + "' has no user text");
    t.placeholders = placeholders_in(t.system_text);
    for (const auto& p : placeholders_in(t.user_text)) t.placeholders.insert(p);
  }
  for (const auto name : kRequired) {
    if (!set.templates_.contains(std::string(name))) {
      throw Error(ErrorCode::TemplateError, "template file lacks '" + std::string(name) + "'");
    }
  }
  return set;
}

PromptTemplateSet PromptTemplateSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open template file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const PromptTemplateSet& PromptTemplateSet::builtin() {
  static const PromptTemplateSet set = parse(kDefaultPromptTemplates);
  return set;
}

const PromptTemplate& PromptTemplateSet::at(const std::string& name) const {
  const auto it = templates_.find(name);
  if (it == templates_.end()) throw Error(ErrorCode::TemplateError, "no template named '" + name + "'");
  return it->second;
}

backend::ChatRequest PromptTemplateSet::render(const std::string& name, const TemplateVars& vars) const {
  const PromptTemplate& t = at(name);
  backend::ChatRequest request;
  request.system_text = fill(t.system_text, vars, name);
  request.user_text = fill(t.user_text, vars, name);
  request.response_schema_id = t.schema;
  return request;
}

}  // namespace iiie::analysis

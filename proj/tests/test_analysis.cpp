#include <doctest.h>

#include <deque>
#include <set>

#include "analysis/analyzer.hpp"
#include "analysis/templates.hpp"
#include "test_support.hpp"

using namespace iiie;
using namespace iiie::analysis;
using testing::code_of;

namespace {

// Replays canned replies in order and keeps every request.
class QueueChat final : public backend::ChatBackend {
 public:
  explicit QueueChat(std::deque<std::string> replies) : replies_(std::move(replies)) {}
  backend::ChatResponse chat(const backend::ChatRequest& r) override {
    requests.push_back(r);
    std::string reply = replies_.empty() ? "{}" : replies_.front();
    if (!replies_.empty()) replies_.pop_front();
    return {reply, "stop"};
  }
  std::vector<backend::ChatRequest> requests;

 private:
  std::deque<std::string> replies_;
};

class DownChat final : public backend::ChatBackend {
 public:
  backend::ChatResponse chat(const backend::ChatRequest&) override {
    throw Error(ErrorCode::BackendUnreachable, "down");
  }
};

InstructionAnalyzer mock_analyzer(const backend::MockSuite& m) {
  return InstructionAnalyzer(m.chat, PromptTemplateSet::builtin());
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

const std::vector<std::pair<std::string, EditCategory>> kExemplars{
    {"Adding new objects within the images", EditCategory::Addition},
    {"Removing objects", EditCategory::Remove},
    {"make it smile", EditCategory::LocalEdit},
    {"let's see it in winter", EditCategory::GlobalEdit},
    {"Alter an object's visual appearance without affecting its structure", EditCategory::LocalEdit},
    {"Change the scene's background", EditCategory::BackgroundEdit},
};

// 200 synthetic instructions: 20 templates x 10 objects.
std::vector<std::string> synthetic_corpus() {
  const std::vector<std::string> templates{
      "make the {} into a statue",   "remove the {}",
      "add a {} next to the tree",   "change the background behind the {}",
      "let's see it in winter",      "turn the {} blue",
      "erase the {} from the photo", "put a {} on the table",
      "replace the {} with a robot", "make the whole image a watercolor painting",
      "give the {} a hat",           "delete every {}",
      "insert a small {}",           "change the scenery around the {}",
      "the {} should smile",         "convert the picture into a cartoon",
      "get rid of the {}",           "place two {} in the corner",
      "colour the {} red",           "{}"};
  const std::vector<std::string> objects{"horse", "cat", "lamp",    "red balloon", "old wooden chair",
                                         "dog",   "car", "sailboat", "tree",       "person"};
  std::vector<std::string> out;
  for (const auto& t : templates) {
    for (const auto& o : objects) {
      std::string s = t;
      const auto at = s.find("{}");
      if (at != std::string::npos) s.replace(at, 2, o);
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("mock analysis of the horse instruction") {
  const auto m = testing::mocks();
  const AnalysisRecord r = mock_analyzer(m).analyze("Make the horse into a unicorn");
  CHECK(r.category == EditCategory::LocalEdit);
  CHECK(r.main_object == std::optional<std::string>("horse"));
  CHECK_FALSE(r.addition_subject);
  CHECK(contains(r.target_prompt, "unicorn"));
  CHECK(r.provenance == Provenance::Llm);
  CHECK(validate_plan(r.to_plan()).empty());
}

TEST_CASE("mock analysis covers global, addition and removal") {
  const auto m = testing::mocks();
  const auto analyzer = mock_analyzer(m);

  const AnalysisRecord winter = analyzer.analyze("let's see it in winter");
  CHECK(winter.category == EditCategory::GlobalEdit);
  CHECK_FALSE(winter.main_object);
  CHECK_FALSE(winter.addition_subject);
  CHECK(contains(winter.target_prompt, "winter"));

  const AnalysisRecord balloon = analyzer.analyze("add a red balloon");
  CHECK(balloon.category == EditCategory::Addition);
  CHECK(balloon.addition_subject == std::optional<std::string>("red balloon"));
  CHECK_FALSE(balloon.main_object);

  const AnalysisRecord lamp = analyzer.analyze("remove the lamp");
  CHECK(lamp.category == EditCategory::Remove);
  CHECK(lamp.main_object == std::optional<std::string>("lamp"));
  CHECK_FALSE(contains(to_lower(lamp.target_prompt), "lamp"));
}

TEST_CASE("empty instruction is a precondition violation") {
  const auto m = testing::mocks();
  CHECK(code_of([&] { mock_analyzer(m).classify("  "); }) == ErrorCode::PreconditionViolation);
  CHECK(code_of([] { fallback_classify(""); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("one corrective re-ask, then AnalysisUnparseable") {
  auto chat = std::make_shared<QueueChat>(std::deque<std::string>{"no json here", R"({"category": "Remove"})"});
  InstructionAnalyzer a(chat, PromptTemplateSet::builtin());
  CHECK(a.classify("remove it").category == EditCategory::Remove);
  REQUIRE(chat->requests.size() == 2);
  CHECK_FALSE(contains(chat->requests[0].user_text, "Correction"));
  CHECK(contains(chat->requests[1].user_text, "Correction"));

  auto bad = std::make_shared<QueueChat>(std::deque<std::string>{"nope", R"({"category": "Sideways"})"});
  InstructionAnalyzer b(bad, PromptTemplateSet::builtin());
  CHECK(code_of([&] { b.classify("do something"); }) == ErrorCode::AnalysisUnparseable);
  CHECK(bad->requests.size() == 2);
}

TEST_CASE("schema validation of object and prompt replies") {
  const auto twice = [](std::string reply) {
    return std::make_shared<QueueChat>(std::deque<std::string>{reply, reply});
  };
  const auto& t = PromptTemplateSet::builtin();
  CHECK(code_of([&] {
          InstructionAnalyzer(twice(R"({"main_object": null})"), t).extract_objects("x", EditCategory::LocalEdit);
        }) == ErrorCode::AnalysisUnparseable);
  CHECK(code_of([&] {
          InstructionAnalyzer(twice(R"({"main_object": "big old red wooden chair with legs"})"), t)
              .extract_objects("x", EditCategory::Remove);
        }) == ErrorCode::AnalysisUnparseable);
  CHECK(code_of([&] {
          InstructionAnalyzer(twice(R"({"target_prompt": "a room with a lamp"})"), t)
              .build_target_prompt("remove the lamp", EditCategory::Remove, {std::string("lamp"), std::nullopt});
        }) == ErrorCode::AnalysisUnparseable);
  std::string long_prompt = R"({"target_prompt": ")";
  for (int i = 0; i < 76; ++i) long_prompt += "word ";
  long_prompt += "\"}";
  CHECK(code_of([&] {
          InstructionAnalyzer(twice(long_prompt), t).build_target_prompt("x", EditCategory::LocalEdit, {});
        }) == ErrorCode::AnalysisUnparseable);

  const auto fenced = InstructionAnalyzer(twice("```json\n{\"main_object\": \"The Horse.\"}\n```"), t)
                          .extract_objects("x", EditCategory::LocalEdit);
  CHECK(fenced.main_object == std::optional<std::string>("horse"));
}

TEST_CASE("GlobalEdit skips the object turn") {
  auto chat = std::make_shared<QueueChat>(std::deque<std::string>{});
  InstructionAnalyzer a(chat, PromptTemplateSet::builtin());
  const ObjectPhrases none = a.extract_objects("let's see it in winter", EditCategory::GlobalEdit);
  CHECK_FALSE(none.main_object);
  CHECK_FALSE(none.addition_subject);
  CHECK(chat->requests.empty());
}

TEST_CASE("classification is text only; box proposal attaches the image") {
  auto chat = std::make_shared<QueueChat>(std::deque<std::string>{R"({"category": "Addition"})", R"({"box": [1, 2, 3, 4]})"});
  InstructionAnalyzer a(chat, PromptTemplateSet::builtin());
  a.classify("add a hat");
  CHECK(a.propose_box("add a hat", "hat", ImageBuffer(8, 8)) == BoundingBox{1, 2, 3, 4});
  REQUIRE(chat->requests.size() == 2);
  CHECK_FALSE(chat->requests[0].image);
  CHECK(chat->requests[1].image);
  CHECK(chat->requests[1].response_schema_id == backend::SchemaId::BoxProposal);
}

TEST_CASE("unreachable chat propagates") {
  InstructionAnalyzer a(std::make_shared<DownChat>(), PromptTemplateSet::builtin());
  CHECK(code_of([&] { a.analyze("make it smile"); }) == ErrorCode::BackendUnreachable);
}

TEST_CASE("fallback classifies the six guideline exemplars") {
  for (const auto& [instruction, category] : kExemplars) {
    CAPTURE(instruction);
    const AnalysisRecord r = fallback_classify(instruction);
    CHECK(r.category == category);
    CHECK(r.provenance == Provenance::Fallback);
    CHECK(validate_plan(r.to_plan()).empty());
  }
}

TEST_CASE("fallback heuristics") {
  const AnalysisRecord balloon = fallback_classify("add a red balloon");
  CHECK(balloon.category == EditCategory::Addition);
  CHECK(balloon.addition_subject == std::optional<std::string>("red balloon"));
  CHECK(balloon.confidence == Confidence::High);

  const AnalysisRecord lamp = fallback_classify("remove the lamp");
  CHECK(lamp.main_object == std::optional<std::string>("lamp"));
  CHECK_FALSE(contains(lamp.target_prompt, "lamp"));

  CHECK(fallback_classify("Change the scene's background").category == EditCategory::BackgroundEdit);
  CHECK(fallback_classify("zzz qqq").confidence == Confidence::Low);

  const AnalysisRecord forced = fallback_classify("a horse", EditCategory::Remove);
  CHECK(forced.category == EditCategory::Remove);
  CHECK(forced.confidence == Confidence::High);
  CHECK(validate_plan(forced.to_plan()).empty());
}

TEST_CASE("every analysis of a 200-instruction corpus is a valid plan and repeatable") {
  const auto corpus = synthetic_corpus();
  REQUIRE(corpus.size() == 200);
  const auto m = testing::mocks();
  const auto analyzer = mock_analyzer(m);
  std::set<EditCategory> seen;
  for (const auto& instruction : corpus) {
    CAPTURE(instruction);
    const AnalysisRecord fb = fallback_classify(instruction);
    CHECK(validate_plan(fb.to_plan()).empty());
    CHECK(to_json(fallback_classify(instruction)) == to_json(fb));
    seen.insert(fb.category);

    const AnalysisRecord llm = analyzer.analyze(instruction);
    CHECK(validate_plan(llm.to_plan()).empty());
    CHECK(to_json(analyzer.analyze(instruction)) == to_json(llm));
    if (llm.category == EditCategory::Remove && llm.main_object) {
      CHECK_FALSE(contains(to_lower(llm.target_prompt), *llm.main_object));
    }
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("prompt templates") {
  const auto& builtin = PromptTemplateSet::builtin();
  CHECK(builtin.version() == 1);
  for (const char* name : {"classification", "object-extraction", "prompt-build", "box-proposal", "synonym"}) {
    CHECK_NOTHROW(builtin.at(name));
  }
  CHECK(builtin.at("classification").placeholders.count("instruction") == 1);
  CHECK(code_of([&] { builtin.render("classification", {}); }) == ErrorCode::TemplateError);
  CHECK(code_of([&] { builtin.at("haiku"); }) == ErrorCode::TemplateError);
  CHECK(contains(builtin.render("classification", {{"instruction", "make it smile"}}).user_text,
                 "Instruction: make it smile"));

  CHECK(code_of([] { PromptTemplateSet::parse("version = 2\n"); }) == ErrorCode::TemplateError);
  CHECK(code_of([] { PromptTemplateSet::parse("stray line\n"); }) == ErrorCode::TemplateError);
  CHECK(code_of([] { PromptTemplateSet::parse("version = 1\n[classification.user]\nx\n"); }) ==
        ErrorCode::TemplateError);
  CHECK(builtin.render("classification", {{"instruction", "x"}}).user_text ==
        PromptTemplateSet::load(std::string(IIIE_FIXTURE_DIR) + "/../../config/prompt_templates.txt")
            .render("classification", {{"instruction", "x"}})
            .user_text);
}

TEST_CASE("phrase normalisation") {
  CHECK(normalize_phrase("  The   Red Balloon. ") == "red balloon");
  CHECK(normalize_phrase("an apple") == "apple");
  CHECK(code_of([] { extract_json_object("no braces"); }) == ErrorCode::AnalysisUnparseable);
  CHECK(code_of([] { extract_json_object("{not json}"); }) == ErrorCode::AnalysisUnparseable);
}

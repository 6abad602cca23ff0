#include "orchestrator/batch.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "core/errors.hpp"

namespace iiie::orchestrator {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool usable_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  for (const char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::string field(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::ManifestMalformed,
                "manifest line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

std::vector<ManifestRecord> parse_manifest(std::string_view text, const std::string& base_dir) {
  std::vector<ManifestRecord> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ManifestMalformed, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) {
      throw Error(ErrorCode::ManifestMalformed, "manifest line " + std::to_string(line_no) + " is not an object");
    }
    ManifestRecord r{field(j, "id", line_no), field(j, "image_path", line_no), field(j, "instruction", line_no)};
    if (!usable_id(r.id)) {
      throw Error(ErrorCode::ManifestMalformed, "manifest line " + std::to_string(line_no) + ": bad id '" + r.id + "'");
    }
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::ManifestMalformed, "manifest line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
    }
    if (fs::path(r.image_path).is_relative() && !base_dir.empty()) {
      r.image_path = (fs::path(base_dir) / r.image_path).string();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ManifestRecord> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ManifestMalformed, "cannot open manifest " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str(), fs::path(path).parent_path().string());
}

std::size_t BatchSummary::succeeded() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.phase == JobPhase::Done ? 1 : 0;
  return n;
}

double BatchSummary::success_rate() const {
  return records.empty() ? 0.0 : static_cast<double>(succeeded()) / static_cast<double>(records.size());
}

json to_json(const BatchRecord& r) {
  json j{{"id", r.id}, {"phase", to_string(r.phase)}, {"wall_ms", r.wall_ms}};
  j["error_code"] = r.error_code ? json(to_string(*r.error_code)) : json(nullptr);
  j["error_message"] = r.error_code ? json(r.error_message) : json(nullptr);
  return j;
}

BatchSummary run_batch(const Engine& engine, const std::vector<ManifestRecord>& records, const std::string& out_dir,
                       int parallelism) {
  if (parallelism < 1) throw Error(ErrorCode::PreconditionViolation, "parallelism must be >= 1");
  fs::create_directories(out_dir);
  BatchSummary summary;
  summary.records.resize(records.size());
  std::atomic<std::size_t> next{0};

  const auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      const ManifestRecord& rec = records[i];
      const auto start = std::chrono::steady_clock::now();
      JobInput input;
      input.request.id = rec.id;
      input.request.instruction = rec.instruction;
      JobState state;
      try {
        input.request.image = decode_image(read_file(rec.image_path));
        state = engine.run(input, (fs::path(out_dir) / rec.id).string());
      } catch (const Error& e) {
        state.id = rec.id;
        state.fail(e.code(), e.what());
      }
      BatchRecord& out = summary.records[i];
      out.id = rec.id;
      out.phase = state.phase;
      if (state.error) {
        out.error_code = state.error->code;
        out.error_message = state.error->message;
      }
      out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    }
  };

  const int n = std::min<int>(parallelism, std::max<int>(1, static_cast<int>(records.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(work);
    work();
  }

  std::string lines;
  for (const auto& r : summary.records) lines += to_json(r).dump() + "\n";
  lines += json{{"total", summary.records.size()},
                {"succeeded", summary.succeeded()},
                {"success_rate", summary.success_rate()}}
               .dump() +
           "\n";
  write_file_atomic((fs::path(out_dir) / kBatchSummaryFile).string(), lines);
  return summary;
}

}  // namespace iiie::orchestrator

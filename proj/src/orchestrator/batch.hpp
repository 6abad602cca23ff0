#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "orchestrator/pipeline.hpp"

namespace iiie::orchestrator {

struct ManifestRecord {
  std::string id;
  std::string image_path;  // resolved against the manifest directory
  std::string instruction;
};

// JSONL, one {"id", "image_path", "instruction"} object per line; blank lines
// are skipped. Throws ManifestMalformed on bad JSON, missing fields, ids that
// are not usable directory names, or duplicate ids.
std::vector<ManifestRecord> parse_manifest(std::string_view text, const std::string& base_dir);
std::vector<ManifestRecord> load_manifest(const std::string& path);

struct BatchRecord {
  std::string id;
  JobPhase phase = JobPhase::Queued;
  std::optional<ErrorCode> error_code;
  std::string error_message;
  std::int64_t wall_ms = 0;
};

struct BatchSummary {
  std::vector<BatchRecord> records;  // manifest order
  std::size_t succeeded() const;
  double success_rate() const;
};

nlohmann::json to_json(const BatchRecord& record);

inline constexpr const char* kBatchSummaryFile = "batch_summary.jsonl";

// Runs every record through `engine` with `parallelism` workers. Job
// artifacts land in out_dir/<id>/; out_dir/batch_summary.jsonl holds one line
// per record plus a final totals line.
BatchSummary run_batch(const Engine& engine, const std::vector<ManifestRecord>& records, const std::string& out_dir,
                       int parallelism);

}  // namespace iiie::orchestrator

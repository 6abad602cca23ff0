#pragma once

#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "backend/client.hpp"

namespace iiie::orchestrator {

// Every backend exchange of one job, in call order. Image payloads are
// replaced by the SHA-256 of their encoded bytes.
class TranscriptRecorder {
 public:
  struct Entry {
    std::string endpoint;  // chat, ground, inpaint, global-edit
    nlohmann::json request;
    nlohmann::json response;  // null when the call failed
    nlohmann::json error;     // null when the call succeeded
  };

  // Wraps `inner` so each call is recorded here. The recorder must outlive
  // the returned backends.
  backend::Backends wrap(const backend::Backends& inner);

  void record(Entry entry);
  std::vector<Entry> entries() const;

  // transcripts/NN-<endpoint>.json, numbered from 01.
  static std::string file_name(std::size_t index, const std::string& endpoint);

 private:
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
};

nlohmann::json to_json(const TranscriptRecorder::Entry& entry);

// Replaces every string under an "image" or "mask" key by
// {"sha256": hex, "bytes": n} of the decoded payload.
nlohmann::json scrub_payloads(const nlohmann::json& j);

}  // namespace iiie::orchestrator

#include "orchestrator/transcript.hpp"

#include <cstdio>

#include "core/digest.hpp"
#include "core/errors.hpp"

namespace iiie::orchestrator {

using nlohmann::json;

namespace {

json describe_payload(const std::string& b64) {
  try {
    const Bytes bytes = base64_decode(b64);
    return {{"sha256", to_hex(sha256(bytes))}, {"bytes", bytes.size()}};
  } catch (const Error&) {
    return {{"sha256", to_hex(sha256(std::string_view(b64)))}, {"bytes", b64.size()}, {"undecodable", true}};
  }
}

template <typename Fn>
auto recorded(TranscriptRecorder& rec, const char* endpoint, json request, Fn call) {
  try {
    auto response = call();
    rec.record({endpoint, scrub_payloads(request), scrub_payloads(backend::to_json(response)), nullptr});
    return response;
  } catch (const Error& e) {
    rec.record({endpoint, scrub_payloads(request), nullptr,
                json{{"code", to_string(e.code())}, {"message", e.what()}}});
    throw;
  }
}

class RecordingChat final : public backend::ChatBackend {
 public:
  RecordingChat(std::shared_ptr<backend::ChatBackend> inner, TranscriptRecorder& rec) : inner_(std::move(inner)), rec_(rec) {}
  backend::ChatResponse chat(const backend::ChatRequest& r) override {
    return recorded(rec_, "chat", backend::to_json(r), [&] { return inner_->chat(r); });
  }

 private:
  std::shared_ptr<backend::ChatBackend> inner_;
  TranscriptRecorder& rec_;
};

class RecordingGround final : public backend::GroundBackend {
 public:
  RecordingGround(std::shared_ptr<backend::GroundBackend> inner, TranscriptRecorder& rec) : inner_(std::move(inner)), rec_(rec) {}
  backend::GroundResponse ground(const backend::GroundRequest& r) override {
    return recorded(rec_, "ground", backend::to_json(r), [&] { return inner_->ground(r); });
  }

 private:
  std::shared_ptr<backend::GroundBackend> inner_;
  TranscriptRecorder& rec_;
};

class RecordingInpaint final : public backend::InpaintBackend {
 public:
  RecordingInpaint(std::shared_ptr<backend::InpaintBackend> inner, TranscriptRecorder& rec) : inner_(std::move(inner)), rec_(rec) {}
  backend::ImageResponse inpaint(const backend::InpaintRequest& r) override {
    return recorded(rec_, "inpaint", backend::to_json(r), [&] { return inner_->inpaint(r); });
  }

 private:
  std::shared_ptr<backend::InpaintBackend> inner_;
  TranscriptRecorder& rec_;
};

class RecordingGlobal final : public backend::GlobalEditBackend {
 public:
  RecordingGlobal(std::shared_ptr<backend::GlobalEditBackend> inner, TranscriptRecorder& rec) : inner_(std::move(inner)), rec_(rec) {}
  backend::ImageResponse global_edit(const backend::GlobalEditRequest& r) override {
    return recorded(rec_, "global-edit", backend::to_json(r), [&] { return inner_->global_edit(r); });
  }

 private:
  std::shared_ptr<backend::GlobalEditBackend> inner_;
  TranscriptRecorder& rec_;
};

}  // namespace

backend::Backends TranscriptRecorder::wrap(const backend::Backends& inner) {
  backend::Backends out;
  if (inner.chat) out.chat = std::make_shared<RecordingChat>(inner.chat, *this);
  if (inner.ground) out.ground = std::make_shared<RecordingGround>(inner.ground, *this);
  if (inner.inpaint) out.inpaint = std::make_shared<RecordingInpaint>(inner.inpaint, *this);
  if (inner.global_edit) out.global_edit = std::make_shared<RecordingGlobal>(inner.global_edit, *this);
  return out;
}

void TranscriptRecorder::record(Entry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<TranscriptRecorder::Entry> TranscriptRecorder::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::string TranscriptRecorder::file_name(std::size_t index, const std::string& endpoint) {
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%02zu", index + 1);
  return "transcripts/" + std::string(prefix) + "-" + endpoint + ".json";
}

json to_json(const TranscriptRecorder::Entry& e) {
  return {{"endpoint", e.endpoint}, {"request", e.request}, {"response", e.response}, {"error", e.error}};
}

json scrub_payloads(const json& j) {
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(scrub_payloads(v));
    return out;
  }
  if (!j.is_object()) return j;
  json out = json::object();
  for (const auto& [key, value] : j.items()) {
    if ((key == "image" || key == "mask") && value.is_string()) {
      out[key] = describe_payload(value.get<std::string>());
    } else {
      out[key] = scrub_payloads(value);
    }
  }
  return out;
}

}  // namespace iiie::orchestrator

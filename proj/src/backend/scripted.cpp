// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include "structex/backend.hpp"
#include "structex/error.hpp"

namespace structex::backend {

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries, MissPolicy policy)
    : policy_(policy) {
  for (auto& entry : entries) {
    auto [it, inserted] = table_.emplace(entry.fingerprint, entry.response);
    if (!inserted && it->second != entry.response) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("script has conflicting responses for {}", entry.fingerprint));
    }
  }
}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path, MissPolicy policy) {
  std::vector<ScriptEntry> entries;
  for (const auto& record : read_jsonl(path)) entries.push_back(script_entry_from_json(record));
  return ScriptedBackend(std::move(entries), policy);
}

std::string ScriptedBackend::do_complete(const PromptTemplate& tpl, const Slots& slots) {
  const std::string fp = fingerprint(tpl, slots);
  if (auto it = table_.find(fp); it != table_.end()) return it->second;
  if (policy_ == MissPolicy::kEcho) return tpl.render(slots);
  throw Error(ErrorCode::kScriptMiss,
              fmt::format("no scripted response for template '{}' fingerprint {}", tpl.name(), fp));
}

Json to_json(const ScriptEntry& entry) {
  Json j{{"fingerprint", entry.fingerprint}, {"response", entry.response}};
  if (!entry.template_name.empty()) j["template"] = entry.template_name;
  return j;
}

ScriptEntry script_entry_from_json(const Json& record) {
  try {
    return ScriptEntry{record.at("fingerprint").get<std::string>(),
                       record.at("response").get<std::string>(),
                       record.value("template", std::string{})};
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, fmt::format("bad script record: {}", e.what()));
  }
}

std::string RecordingBackend::do_complete(const PromptTemplate& tpl, const Slots& slots) {
  std::string response = inner_.complete(tpl, slots);
  std::string fp = fingerprint(tpl, slots);
  std::lock_guard lock(mu_);
  recorded_.insert_or_assign(fp, ScriptEntry{fp, response, tpl.name()});
  return response;
}

std::vector<ScriptEntry> RecordingBackend::entries() const {
  std::lock_guard lock(mu_);
  std::vector<ScriptEntry> out;
  out.reserve(recorded_.size());
  for (const auto& [fp, entry] : recorded_) out.push_back(entry);
  return out;
}

void AuditLog::append(AuditRecord record) {
  if (record.response.size() > max_response_chars_) {
    std::size_t cut = max_response_chars_;
    while (cut > 0 && (static_cast<unsigned char>(record.response[cut]) & 0xC0) == 0x80) --cut;
    record.response.resize(cut);
    record.response += "...";
  }
  std::lock_guard lock(mu_);
  records_.push_back(std::move(record));
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<Json> AuditLog::to_jsonl_records() const {
  std::vector<Json> out;
  for (const auto& r : records()) {
    out.push_back({{"template", r.template_name},
                   {"slot_hash", r.slot_hash},
                   {"attempt", r.attempt},
                   {"status", r.status},
                   {"latency_ms", r.latency_ms},
                   {"response", r.response}});
  }
  return out;
}

}  // namespace structex::backend

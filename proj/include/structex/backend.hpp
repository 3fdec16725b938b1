// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "structex/jsonl.hpp"

namespace structex::backend {

using Slots = std::map<std::string, std::string>;

// A prompt body with {slot-name} placeholders. The required slots are exactly
// the placeholders that occur in the body.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  PromptTemplate(std::string name, std::string body);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::string& body() const { return body_; }
  [[nodiscard]] const std::set<std::string>& required_slots() const { return required_; }

  // Throws MissingSlot naming the first uncovered placeholder.
  void check_slots(const Slots& slots) const;
  [[nodiscard]] std::string render(const Slots& slots) const;

 private:
  std::string name_;
  std::string body_;
  std::set<std::string> required_;
};

struct TemplateSet {
  PromptTemplate fact_table;
  PromptTemplate decision;
  PromptTemplate reflection;
};

// Compiled-in copies of templates/{fact_table,decision,reflection}.txt.
const TemplateSet& default_templates();
// Reads fact_table.txt, decision.txt and reflection.txt from `dir`.
TemplateSet load_templates(const std::filesystem::path& dir);

// CRLF and lone CR become LF.
std::string normalize_line_endings(std::string_view text);

// SHA-256 over the template name and the required slots in sorted key order,
// each value length-prefixed and line-ending normalized. Slots that the
// template does not reference do not contribute.
std::string fingerprint(const PromptTemplate& tpl, const Slots& slots);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  // Validates slot coverage, then delegates. Safe for concurrent callers.
  std::string complete(const PromptTemplate& tpl, const Slots& slots);

 protected:
  virtual std::string do_complete(const PromptTemplate& tpl, const Slots& slots) = 0;
};

// Adapts a callable; handy for tests and planners.
class FunctionBackend final : public LlmBackend {
 public:
  using Fn = std::function<std::string(const PromptTemplate&, const Slots&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}

 protected:
  std::string do_complete(const PromptTemplate& tpl, const Slots& slots) override {
    return fn_(tpl, slots);
  }

 private:
  Fn fn_;
};

enum class MissPolicy { kError, kEcho };

struct ScriptEntry {
  std::string fingerprint;
  std::string response;
  std::string template_name;  // informational only
};

// Deterministic fingerprint -> response table. Immutable once built, so
// lookups need no locking.
class ScriptedBackend final : public LlmBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> entries,
                           MissPolicy policy = MissPolicy::kError);

  static ScriptedBackend load(const std::filesystem::path& path,
                              MissPolicy policy = MissPolicy::kError);

  [[nodiscard]] std::size_t size() const { return table_.size(); }

 protected:
  std::string do_complete(const PromptTemplate& tpl, const Slots& slots) override;

 private:
  std::unordered_map<std::string, std::string> table_;
  MissPolicy policy_;
};

Json to_json(const ScriptEntry& entry);
ScriptEntry script_entry_from_json(const Json& record);

// Forwards to an inner backend and remembers every exchange, producing a
// script that replays the session through ScriptedBackend.
class RecordingBackend final : public LlmBackend {
 public:
  explicit RecordingBackend(LlmBackend& inner) : inner_(inner) {}

  // Sorted by fingerprint.
  [[nodiscard]] std::vector<ScriptEntry> entries() const;

 protected:
  std::string do_complete(const PromptTemplate& tpl, const Slots& slots) override;

 private:
  LlmBackend& inner_;
  mutable std::mutex mu_;
  std::map<std::string, ScriptEntry> recorded_;
};

struct AuditRecord {
  std::string template_name;
  std::string slot_hash;
  int attempt = 0;
  int status = 0;  // HTTP status, 0 on transport failure
  double latency_ms = 0.0;
  std::string response;  // truncated
};

class AuditLog {
 public:
  explicit AuditLog(std::size_t max_response_chars = 240)
      : max_response_chars_(max_response_chars) {}

  void append(AuditRecord record);
  [[nodiscard]] std::vector<AuditRecord> records() const;
  [[nodiscard]] std::vector<Json> to_jsonl_records() const;

 private:
  std::size_t max_response_chars_;
  mutable std::mutex mu_;
  std::vector<AuditRecord> records_;
};

struct RemoteConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini-2024-07-18";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{60};
  int max_in_flight = 4;
};

// Chat-completion client. Transport failures, 429 and 5xx are retried with
// exponential backoff; every attempt is appended to the audit log.
class RemoteBackend final : public LlmBackend {
 public:
  explicit RemoteBackend(RemoteConfig config, std::shared_ptr<AuditLog> audit = nullptr);
  ~RemoteBackend() override;

  [[nodiscard]] const RemoteConfig& config() const { return config_; }
  [[nodiscard]] std::shared_ptr<AuditLog> audit() const { return audit_; }

  // Request body for one prompt; exposed for tests of the wire format.
  [[nodiscard]] Json request_body(const std::string& prompt) const;
  // Extracts choices[0].message.content; throws RemoteError otherwise.
  static std::string response_text(const std::string& body);

 protected:
  std::string do_complete(const PromptTemplate& tpl, const Slots& slots) override;

 private:
  RemoteConfig config_;
  std::shared_ptr<AuditLog> audit_;
  std::counting_semaphore<1024> in_flight_;
};

}  // namespace structex::backend

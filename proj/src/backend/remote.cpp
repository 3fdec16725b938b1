// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "structex/backend.hpp"
#include "structex/error.hpp"
#include "structex/hashing.hpp"

namespace structex::backend {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfig, fmt::format("endpoint '{}' lacks a scheme", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config, std::shared_ptr<AuditLog> audit)
    : config_(std::move(config)),
      audit_(audit ? std::move(audit) : std::make_shared<AuditLog>()),
      in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.max_attempts < 1) throw Error(ErrorCode::kConfig, "max_attempts must be >= 1");
}

RemoteBackend::~RemoteBackend() = default;

Json RemoteBackend::request_body(const std::string& prompt) const {
  return Json{{"model", config_.model},
              {"temperature", config_.temperature},
              {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})}};
}

std::string RemoteBackend::response_text(const std::string& body) {
  try {
    const Json j = Json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kRemoteError, fmt::format("unexpected response body: {}", e.what()));
  }
}

std::string RemoteBackend::do_complete(const PromptTemplate& tpl, const Slots& slots) {
  const std::string prompt = tpl.render(slots);
  const std::string body = request_body(prompt).dump();
  const std::string slot_hash = fingerprint(tpl, slots);
  const Endpoint endpoint = split_url(config_.endpoint);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", fmt::format("Bearer {}", key));
    }
  }

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& sem;
    ~Release() { sem.release(); }
  } release{in_flight_};

  auto backoff = config_.initial_backoff;
  std::string last_error;
  int attempts = 0;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    attempts = attempt;
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    const auto start = std::chrono::steady_clock::now();
    auto result = client.Post(endpoint.path, headers, body, "application/json");
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    const int status = result ? result->status : 0;
    const std::string response_body = result ? result->body : std::string{};
    audit_->append(AuditRecord{tpl.name(), slot_hash, attempt, status, latency, response_body});

    if (status == 200) return response_text(response_body);
    last_error = result ? fmt::format("HTTP {}", status)
                        : fmt::format("transport error: {}", httplib::to_string(result.error()));
    if (!retryable(status)) break;
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::kRemoteError,
              fmt::format("template '{}' failed after {} attempt(s): {}", tpl.name(), attempts, last_error));
}

}  // namespace structex::backend

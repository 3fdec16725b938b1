// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "structex/backend.hpp"
#include "structex/error.hpp"
#include "structex/hashing.hpp"

using namespace structex;
using namespace structex::backend;

namespace {

const PromptTemplate kTpl("greet", "Hello {name}, you are {age}.\n");

// Local chat-completion stand-in. `plan` maps the n-th request (0-based) to
// an HTTP status; anything past the plan answers 200.
class FakeServer {
 public:
  explicit FakeServer(std::vector<int> plan, std::chrono::milliseconds delay = std::chrono::milliseconds(0))
      : plan_(std::move(plan)) {
    server_.Post("/v1/chat/completions", [this, delay](const httplib::Request& req, httplib::Response& res) {
      const int n = requests_++;
      const int now = ++in_flight_;
      int seen = peak_.load();
      while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
      }
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      const int status = n < static_cast<int>(plan_.size()) ? plan_[static_cast<std::size_t>(n)] : 200;
      res.status = status;
      if (status == 200) {
        const auto prompt = Json::parse(req.body)["messages"][0]["content"].get<std::string>();
        res.set_content(Json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + prompt}}}}}}}.dump(),
                        "application/json");
      } else {
        res.set_content("{\"error\":\"nope\"}", "application/json");
      }
      --in_flight_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  [[nodiscard]] std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int requests() const { return requests_; }
  int peak() const { return peak_; }
  std::string last_auth() const { return last_auth_; }
  std::string last_body() const { return last_body_; }

 private:
  std::vector<int> plan_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  std::string last_auth_;
  std::string last_body_;
};

RemoteConfig fast_config(const std::string& endpoint) {
  RemoteConfig c;
  c.endpoint = endpoint;
  c.api_key_env = "STRUCTEX_TEST_KEY";
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(5);
  return c;
}

}  // namespace

TEST_CASE("template slots and rendering") {
  CHECK(kTpl.required_slots() == std::set<std::string>{"age", "name"});
  CHECK(kTpl.render({{"name", "Ann"}, {"age", "7"}, {"extra", "x"}}) == "Hello Ann, you are 7.\n");
  try {
    kTpl.check_slots({{"name", "Ann"}});
    FAIL("expected MissingSlot");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingSlot);
    CHECK(std::string(e.what()).find("age") != std::string::npos);
  }
}

TEST_CASE("default templates carry their placeholders") {
  const auto& t = default_templates();
  CHECK(t.fact_table.required_slots() ==
        std::set<std::string>{"company-ticker", "earnings-call-transcript", "number-of-facts"});
  CHECK(t.decision.required_slots().contains("fact-table"));
  CHECK(t.decision.required_slots().contains("fact-range"));
  CHECK(t.reflection.required_slots().contains("previous-incorrect-outputs"));
  CHECK(t.decision.name() == "decision");
}

TEST_CASE("fingerprint properties") {
  const Slots a = {{"name", "Ann"}, {"age", "7"}};
  const Slots b = {{"age", "7"}, {"name", "Ann"}, {"unused", "zzz"}};
  CHECK(fingerprint(kTpl, a) == fingerprint(kTpl, b));
  CHECK(fingerprint(kTpl, {{"name", "A\r\nB"}, {"age", "1"}}) == fingerprint(kTpl, {{"name", "A\nB"}, {"age", "1"}}));
  CHECK(fingerprint(kTpl, {{"name", "Ann"}, {"age", "8"}}) != fingerprint(kTpl, a));
  // length prefixes keep slot boundaries unambiguous
  CHECK(fingerprint(kTpl, {{"name", "ab"}, {"age", "c"}}) != fingerprint(kTpl, {{"name", "a"}, {"age", "bc"}}));
  CHECK(fingerprint(PromptTemplate("other", kTpl.body()), a) != fingerprint(kTpl, a));
  CHECK(fingerprint(kTpl, a).size() == 64);
}

TEST_CASE("scripted backend hits, misses and echo") {
  const Slots s = {{"name", "Ann"}, {"age", "7"}};
  ScriptedBackend strict({{fingerprint(kTpl, s), "hi Ann", "greet"}});
  CHECK(strict.complete(kTpl, s) == "hi Ann");
  try {
    strict.complete(kTpl, {{"name", "Bo"}, {"age", "7"}});
    FAIL("expected ScriptMiss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kScriptMiss);
  }
  ScriptedBackend echo({}, MissPolicy::kEcho);
  CHECK(echo.complete(kTpl, s) == "Hello Ann, you are 7.\n");
  CHECK_THROWS(ScriptedBackend({{"f", "a", ""}, {"f", "b", ""}}));
  CHECK_THROWS_AS(strict.complete(kTpl, {{"name", "Ann"}}), Error);
}

TEST_CASE("recording then replaying reproduces the session") {
  int calls = 0;
  FunctionBackend live([&](const PromptTemplate& t, const Slots& s) {
    ++calls;
    return "live:" + t.render(s);
  });
  RecordingBackend rec(live);
  const Slots s1 = {{"name", "Ann"}, {"age", "7"}};
  const Slots s2 = {{"name", "Bo"}, {"age", "9"}};
  const auto r1 = rec.complete(kTpl, s1);
  const auto r2 = rec.complete(kTpl, s2);
  rec.complete(kTpl, s1);
  CHECK(calls == 3);
  const auto entries = rec.entries();
  CHECK(entries.size() == 2);
  CHECK(std::is_sorted(entries.begin(), entries.end(),
                       [](const ScriptEntry& a, const ScriptEntry& b) { return a.fingerprint < b.fingerprint; }));

  const auto path = std::filesystem::temp_directory_path() / "structex_replay.jsonl";
  std::vector<Json> lines;
  for (const auto& e : entries) lines.push_back(to_json(e));
  write_jsonl(path, lines);
  auto replay = ScriptedBackend::load(path);
  CHECK(replay.complete(kTpl, s1) == r1);
  CHECK(replay.complete(kTpl, s2) == r2);
  std::filesystem::remove(path);
}

TEST_CASE("audit log truncates on a character boundary") {
  AuditLog log(5);
  log.append({"t", "h", 1, 200, 1.0, "abcd\xc3\xa9xyz"});  // 'é' straddles the cut
  const auto r = log.records().at(0);
  CHECK(r.response == "abcd...");
  CHECK(log.to_jsonl_records().at(0).at("status") == 200);
}

TEST_CASE("remote request and response wire format") {
  RemoteBackend remote(fast_config("http://127.0.0.1:1/x"));
  const auto body = remote.request_body("hi");
  CHECK(body["model"] == "gpt-4o-mini-2024-07-18");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hi");
  CHECK(RemoteBackend::response_text(R"({"choices":[{"message":{"content":"ok"}}]})") == "ok");
  CHECK_THROWS_AS(RemoteBackend::response_text("{}"), Error);
  CHECK_THROWS_AS(RemoteBackend::response_text("not json"), Error);
}

TEST_CASE("remote retries 5xx and 429, then succeeds") {
  FakeServer server({500, 429});
  ::setenv("STRUCTEX_TEST_KEY", "sk-test", 1);
  auto audit = std::make_shared<AuditLog>();
  RemoteBackend remote(fast_config(server.endpoint()), audit);
  const auto reply = remote.complete(kTpl, {{"name", "Ann"}, {"age", "7"}});
  CHECK(reply == "echo: Hello Ann, you are 7.\n");
  CHECK(server.requests() == 3);
  CHECK(server.last_auth() == "Bearer sk-test");
  const auto records = audit->records();
  REQUIRE(records.size() == 3);
  CHECK(records[0].status == 500);
  CHECK(records[1].status == 429);
  CHECK(records[2].status == 200);
  CHECK(records[2].attempt == 3);
  CHECK(records[0].slot_hash == fingerprint(kTpl, {{"name", "Ann"}, {"age", "7"}}));
  ::unsetenv("STRUCTEX_TEST_KEY");
}

TEST_CASE("remote gives up after max attempts and does not retry 4xx") {
  {
    FakeServer server({503, 503, 503, 503});
    RemoteBackend remote(fast_config(server.endpoint()));
    try {
      remote.complete(kTpl, {{"name", "Ann"}, {"age", "7"}});
      FAIL("expected RemoteError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRemoteError);
    }
    CHECK(server.requests() == 3);
  }
  {
    FakeServer server({400});
    RemoteBackend remote(fast_config(server.endpoint()));
    CHECK_THROWS_AS(remote.complete(kTpl, {{"name", "Ann"}, {"age", "7"}}), Error);
    CHECK(server.requests() == 1);
  }
}

TEST_CASE("remote transport failure is retried") {
  auto cfg = fast_config("http://127.0.0.1:1/v1/chat/completions");
  cfg.max_attempts = 2;
  auto audit = std::make_shared<AuditLog>();
  RemoteBackend remote(cfg, audit);
  CHECK_THROWS_AS(remote.complete(kTpl, {{"name", "Ann"}, {"age", "7"}}), Error);
  REQUIRE(audit->records().size() == 2);
  CHECK(audit->records()[0].status == 0);
}

TEST_CASE("remote caps requests in flight") {
  FakeServer server({}, std::chrono::milliseconds(30));
  auto cfg = fast_config(server.endpoint());
  cfg.max_in_flight = 2;
  RemoteBackend remote(cfg);
  std::vector<std::jthread> clients;
  for (int i = 0; i < 6; ++i) {
    clients.emplace_back([&, i] { remote.complete(kTpl, {{"name", std::to_string(i)}, {"age", "1"}}); });
  }
  clients.clear();
  CHECK(server.requests() == 6);
  CHECK(server.peak() <= 2);
}

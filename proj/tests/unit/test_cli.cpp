// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include <fmt/format.h>

#include "structex/hashing.hpp"
#include "structex/jsonl.hpp"

namespace fs = std::filesystem;
using namespace structex;

namespace {

int run(const std::string& args) {
  const auto cmd = fmt::format("'{}' {} > /dev/null 2>&1", STRUCTEX_CLI_PATH, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / "structex_cli_test";
  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  [[nodiscard]] std::string at(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("demo pipeline end to end") {
  Workspace ws;
  REQUIRE(run(fmt::format("make-demo -o '{}' --seed 5 --instances 12", ws.at("demo"))) == 0);
  const auto conf = ws.at("demo/demo.conf");
  REQUIRE(run(fmt::format("pipeline -c '{}' -o '{}'", conf, ws.at("out"))) == 0);

  const auto out = ws.root / "out";
  for (const auto* file : {"facts.jsonl", "decisions.jsonl", "traces.jsonl", "demonstrations.jsonl",
                           "comparisons.jsonl", "reward_model.txt", "policy.txt", "metrics.txt", "paths.txt",
                           "stats.txt", "sweep.txt", "reflect.manifest.json", "confusion_round_0.csv"}) {
    CHECK_MESSAGE(fs::exists(out / file), file);
  }
  CHECK(read_jsonl(out / "traces.jsonl").size() == 12);
  CHECK(read_text_file(out / "reward_model.txt").find("dimension 24") != std::string::npos);
  const auto manifest = Json::parse(read_text_file(out / "reflect.manifest.json"));
  CHECK(manifest["stage"] == "reflect");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["inputs"].contains("facts.jsonl"));
  CHECK(manifest["outputs"]["traces.jsonl"] == sha256_hex(read_text_file(out / "traces.jsonl")));

  // same config, other directory, identical bytes
  REQUIRE(run(fmt::format("pipeline -c '{}' -o '{}'", conf, ws.at("again"))) == 0);
  CHECK(hash_tree(out) == hash_tree(ws.root / "again"));

  // a single stage can be rerun against existing outputs
  CHECK(run(fmt::format("paths -c '{}' -o '{}' --set top_k=2", conf, ws.at("out"))) == 0);
  CHECK(read_jsonl(out / "paths.jsonl").size() <= 4);
}

TEST_CASE("failures exit nonzero and leave no outputs") {
  Workspace ws;
  REQUIRE(run(fmt::format("make-demo -o '{}' --instances 4", ws.at("demo"))) == 0);
  const auto conf = ws.at("demo/demo.conf");

  CHECK(run("no-such-command") != 0);
  CHECK(run(fmt::format("reflect -c '{}' -o '{}'", conf, ws.at("empty"))) == 1);
  CHECK_FALSE(fs::exists(ws.root / "empty" / "traces.jsonl"));
  CHECK(run(fmt::format("distill -c '{}' -o '{}' --set colour=red", conf, ws.at("x"))) == 1);
  CHECK(run(fmt::format("distill -o '{}' --backend scripted:'{}'", ws.at("x"), ws.at("demo/script.jsonl"))) == 1);

  // a script that cannot answer anything
  write_text_file(ws.root / "empty.jsonl", "");
  CHECK(run(fmt::format("distill -c '{}' -o '{}' --backend scripted:'{}'", conf, ws.at("partial"),
                        ws.at("empty.jsonl"))) == 1);
  CHECK_FALSE(fs::exists(ws.root / "partial" / "facts.jsonl"));
  CHECK_FALSE(fs::exists(ws.root / "partial" / "distill.manifest.json"));
}

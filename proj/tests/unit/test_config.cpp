// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "structex/config.hpp"
#include "structex/error.hpp"
#include "structex/jsonl.hpp"

using namespace structex;
using namespace structex::config;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("parse key-value text") {
  const auto kv = parse_config("# comment\nseed = 3\n\nfact_range=3-6\n  horizon_days = 10  \n", "/base");
  CHECK(kv.at("seed") == "3");
  CHECK(kv.at("fact_range") == "3-6");
  CHECK(kv.at("horizon_days") == "10");
  CHECK_THROWS_AS(parse_config("colour = red\n", "/"), Error);
  CHECK_THROWS_AS(parse_config("seed 3\n", "/"), Error);
  CHECK(parse_config("corpus = data/t.jsonl\n", "/base").at("corpus") == "/base/data/t.jsonl");
  CHECK(parse_config("corpus = /abs/t.jsonl\n", "/base").at("corpus") == "/abs/t.jsonl");
}

TEST_CASE("defaults and validation") {
  CHECK_THROWS_AS(resolve({}), Error);
  const auto c = resolve({{"seed", "11"}});
  CHECK(c.seed == 11);
  CHECK(c.horizon_days == 30);
  CHECK(c.fact_range == explanation::FactRange{6, 10});
  CHECK(c.max_reflections == 4);
  CHECK(c.sweep_ranges.size() == 3);
  CHECK(c.rl.beta == 0.2);
  CHECK(c.rl.penalty == learn::Penalty::kRatio);
  CHECK(c.reward.lr == 1e-4);
  CHECK(c.sft.seed == 11);
  CHECK_FALSE(c.backend.has_value());

  CHECK_THROWS_AS(resolve({{"seed", "x"}}), Error);
  CHECK_THROWS_AS(resolve({{"seed", "1"}, {"fact_range", "10-6"}}), Error);
  CHECK_THROWS_AS(resolve({{"seed", "1"}, {"thresholds", "0.1,0,0.2,0.3"}}), Error);
  CHECK_THROWS_AS(resolve({{"seed", "1"}, {"rl.penalty", "square"}}), Error);
  CHECK_THROWS_AS(resolve({{"seed", "1"}, {"corpus", "/definitely/not/here.jsonl"}}), Error);
  CHECK_THROWS_AS(resolve({{"seed", "1"}, {"backend", "magic"}}), Error);
  const auto t = resolve({{"seed", "1"}, {"thresholds", "-0.2,-0.05,0.05,0.2"}, {"rl.penalty", "log_ratio"},
                          {"sweep_ranges", "2-4, 5-9"}, {"rm.adam", "true"}, {"backend", "remote"}});
  CHECK(t.thresholds.cuts[0] == -0.2);
  CHECK(t.rl.penalty == learn::Penalty::kLogRatio);
  CHECK(t.sweep_ranges == std::vector<explanation::FactRange>{{2, 4}, {5, 9}});
  CHECK(t.reward.adam);
  CHECK(t.backend->kind == BackendSpec::Kind::kRemote);
}

TEST_CASE("includes, overrides and cycles") {
  TempDir dir("structex_config_test");
  fs::create_directories(dir.path / "sub");
  write_text_file(dir.path / "data.jsonl", "{}\n");
  write_text_file(dir.path / "sub" / "base.conf", "seed = 1\ncorpus = ../data.jsonl\nmax_reflections = 2\n");
  write_text_file(dir.path / "run.conf", "include = sub/base.conf\nmax_reflections = 3\n");
  const auto kv = load_config_file(dir.path / "run.conf");
  CHECK(fs::path(kv.at("corpus")) == (dir.path / "data.jsonl").lexically_normal());
  CHECK(kv.at("max_reflections") == "3");
  CHECK(resolve(kv).corpus == (dir.path / "data.jsonl").lexically_normal());

  auto over = kv;
  apply_override(over, "max_reflections=1", "/elsewhere");
  apply_override(over, "corpus = x.jsonl", "/elsewhere");
  CHECK(over.at("max_reflections") == "1");
  CHECK(over.at("corpus") == "/elsewhere/x.jsonl");
  CHECK_THROWS_AS(apply_override(over, "nonsense", "/"), Error);
  CHECK_THROWS_AS(apply_override(over, "nope=1", "/"), Error);

  write_text_file(dir.path / "a.conf", "include = b.conf\n");
  write_text_file(dir.path / "b.conf", "include = a.conf\n");
  CHECK_THROWS_AS(load_config_file(dir.path / "a.conf"), Error);
  write_text_file(dir.path / "self.conf", "include = self.conf\n");
  CHECK_THROWS_AS(load_config_file(dir.path / "self.conf"), Error);
  write_text_file(dir.path / "missing.conf", "include = nowhere.conf\n");
  CHECK_THROWS_AS(load_config_file(dir.path / "missing.conf"), Error);
  CHECK_THROWS_AS(load_config_file(dir.path / "absent.conf"), Error);
}

TEST_CASE("config hash ignores output_dir and input locations") {
  TempDir dir("structex_config_hash");
  fs::create_directories(dir.path / "a");
  fs::create_directories(dir.path / "b");
  write_text_file(dir.path / "a" / "t.jsonl", "same content\n");
  write_text_file(dir.path / "b" / "t.jsonl", "same content\n");
  KeyValues one = {{"seed", "1"}, {"corpus", (dir.path / "a" / "t.jsonl").string()}, {"output_dir", "/x"}};
  KeyValues two = {{"seed", "1"}, {"corpus", (dir.path / "b" / "t.jsonl").string()}, {"output_dir", "/y"}};
  CHECK(config_hash(one) == config_hash(two));
  CHECK(resolve(one).hash == config_hash(one));
  two["seed"] = "2";
  CHECK(config_hash(one) != config_hash(two));
  two["seed"] = "1";
  write_text_file(dir.path / "b" / "t.jsonl", "different\n");
  CHECK(config_hash(one) != config_hash(two));
  CHECK(config_hash({{"seed", "1"}, {"top_k", "3"}}) == config_hash({{"top_k", "3"}, {"seed", "1"}}));
}

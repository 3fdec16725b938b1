// SPDX-License-Identifier: Apache-2.0
#include "structex/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "structex/error.hpp"
#include "structex/hashing.hpp"
#include "structex/jsonl.hpp"

namespace structex::config {
namespace {

namespace fs = std::filesystem;

constexpr std::array<std::string_view, 5> kPathKeys = {"corpus", "prices", "templates", "output_dir", "script"};

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = [] {
    std::set<std::string, std::less<>> k = {
        "seed", "corpus", "prices", "templates", "output_dir", "backend", "horizon_days",
        "thresholds", "per_sector", "test_after", "tau", "lookback", "fact_range", "max_reflections",
        "max_retries", "enforce_distinct", "history_char_budget", "workers", "all_pairs", "sweep_ranges",
        "top_k", "rl.beta", "rl.penalty", "remote.endpoint", "remote.model", "remote.api_key_env",
        "remote.temperature", "remote.max_attempts", "remote.backoff_ms", "remote.timeout_s",
        "remote.max_in_flight"};
    for (std::string stage : {"sft", "rm", "rl"}) {
      for (std::string field : {"epochs", "lr", "batch_size", "warmup_ratio", "adam"}) k.insert(stage + "." + field);
    }
    return k;
  }();
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, std::string_view what) {
  throw Error(ErrorCode::kConfig, fmt::format("{} = '{}': {}", key, value, what));
}

template <typename T>
T number(const KeyValues& kv, const std::string& key, T fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const auto& s = it->second;
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad(key, s, "not a number");
  return v;
}

bool boolean(const KeyValues& kv, const std::string& key, bool fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const auto& s = it->second;
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  bad(key, s, "expected true or false");
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    const auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

std::string resolve_path(const std::string& key, const std::string& value, const fs::path& base_dir) {
  if (key == "backend") {
    if (value.rfind("scripted:", 0) == 0) return "scripted:" + resolve_path("script", value.substr(9), base_dir);
    return value;
  }
  if (!is_path_key(key) || value.empty()) return value;
  const fs::path p(value);
  return (p.is_absolute() ? p : base_dir / p).lexically_normal().string();
}

void parse_into(KeyValues& kv, std::string_view text, const fs::path& base_dir, std::string_view source,
                std::vector<fs::path>& stack) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, fmt::format("{}:{}: expected 'key = value'", source, line_no));
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "include") {
      fs::path inc(value);
      if (!inc.is_absolute()) inc = base_dir / inc;
      inc = inc.lexically_normal();
      if (std::find(stack.begin(), stack.end(), inc) != stack.end()) {
        throw Error(ErrorCode::kConfig, fmt::format("{}:{}: include cycle through {}", source, line_no, inc.string()));
      }
      if (!fs::exists(inc)) {
        throw Error(ErrorCode::kConfig, fmt::format("{}:{}: included file {} not found", source, line_no, inc.string()));
      }
      stack.push_back(inc);
      const auto inc_text = read_text_file(inc);
      parse_into(kv, inc_text, inc.parent_path(), inc.string(), stack);
      stack.pop_back();
      continue;
    }
    if (!is_known_key(key)) {
      throw Error(ErrorCode::kConfig, fmt::format("{}:{}: unknown key '{}'", source, line_no, key));
    }
    kv[key] = resolve_path(key, value, base_dir);
  }
}

learn::TrainConfig train_config(const KeyValues& kv, const std::string& stage, learn::TrainConfig c,
                                std::uint64_t seed) {
  c.epochs = number<int>(kv, stage + ".epochs", c.epochs);
  c.lr = number<double>(kv, stage + ".lr", c.lr);
  c.batch_size = number<std::size_t>(kv, stage + ".batch_size", c.batch_size);
  c.warmup_ratio = number<double>(kv, stage + ".warmup_ratio", c.warmup_ratio);
  c.adam = boolean(kv, stage + ".adam", c.adam);
  c.seed = seed;
  if (c.epochs < 0) bad(stage + ".epochs", std::to_string(c.epochs), "must be nonnegative");
  if (!(c.lr >= 0.0)) bad(stage + ".lr", fmt::format("{}", c.lr), "must be nonnegative");
  if (!(c.warmup_ratio >= 0.0 && c.warmup_ratio <= 1.0)) {
    bad(stage + ".warmup_ratio", fmt::format("{}", c.warmup_ratio), "must lie in [0, 1]");
  }
  return c;
}

void require_exists(const fs::path& p, const std::string& key) {
  if (!p.empty() && !fs::exists(p)) {
    throw Error(ErrorCode::kConfig, fmt::format("{} = '{}': path does not exist", key, p.string()));
  }
}

}  // namespace

bool is_known_key(std::string_view key) { return known_keys().contains(key); }

bool is_path_key(std::string_view key) {
  return std::find(kPathKeys.begin(), kPathKeys.end(), key) != kPathKeys.end();
}

KeyValues parse_config(std::string_view text, const fs::path& base_dir, std::string_view source) {
  KeyValues kv;
  std::vector<fs::path> stack;
  parse_into(kv, text, base_dir, source, stack);
  return kv;
}

KeyValues load_config_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kConfig, fmt::format("config file {} not found", path.string()));
  const auto abs = fs::absolute(path).lexically_normal();
  KeyValues kv;
  std::vector<fs::path> stack = {abs};
  parse_into(kv, read_text_file(abs), abs.parent_path(), path.string(), stack);
  return kv;
}

void set_value(KeyValues& kv, const std::string& key, const std::string& value, const fs::path& base_dir) {
  if (!is_known_key(key)) throw Error(ErrorCode::kConfig, fmt::format("unknown key '{}'", key));
  kv[key] = resolve_path(key, value, base_dir);
}

void apply_override(KeyValues& kv, std::string_view assignment, const fs::path& base_dir) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::kConfig, fmt::format("override '{}' is not key=value", assignment));
  }
  set_value(kv, std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))),
            base_dir);
}

explanation::FactRange parse_fact_range(std::string_view text) {
  const auto dash = text.find('-');
  explanation::FactRange r;
  auto parse = [&](std::string_view part, int& out) {
    part = trim(part);
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc() && ptr == part.data() + part.size();
  };
  if (dash == std::string_view::npos || !parse(text.substr(0, dash), r.lo) || !parse(text.substr(dash + 1), r.hi) ||
      r.lo < 1 || r.hi < r.lo) {
    throw Error(ErrorCode::kConfig, fmt::format("bad fact range '{}' (expected lo-hi)", text));
  }
  return r;
}

RunConfig resolve(const KeyValues& kv) {
  RunConfig c;
  if (!kv.contains("seed")) throw Error(ErrorCode::kConfig, "seed is mandatory");
  c.seed = number<std::uint64_t>(kv, "seed", 0);

  auto path_of = [&](const std::string& key) {
    const auto it = kv.find(key);
    return it == kv.end() ? fs::path() : fs::path(it->second);
  };
  c.corpus = path_of("corpus");
  c.prices = path_of("prices");
  c.templates = path_of("templates");
  c.output_dir = path_of("output_dir");
  require_exists(c.corpus, "corpus");
  require_exists(c.prices, "prices");
  require_exists(c.templates, "templates");

  if (const auto it = kv.find("backend"); it != kv.end()) {
    BackendSpec spec;
    if (it->second.rfind("scripted:", 0) == 0) {
      spec.kind = BackendSpec::Kind::kScripted;
      spec.script = it->second.substr(9);
      if (spec.script.empty()) bad("backend", it->second, "scripted backend needs a script path");
      require_exists(spec.script, "backend");
    } else if (it->second == "remote") {
      spec.kind = BackendSpec::Kind::kRemote;
    } else {
      bad("backend", it->second, "expected scripted:<path> or remote");
    }
    c.backend = spec;
  }

  auto str = [&](const std::string& key, std::string fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  c.remote.endpoint = str("remote.endpoint", c.remote.endpoint);
  c.remote.model = str("remote.model", c.remote.model);
  c.remote.api_key_env = str("remote.api_key_env", c.remote.api_key_env);
  c.remote.temperature = number<double>(kv, "remote.temperature", c.remote.temperature);
  c.remote.max_attempts = number<int>(kv, "remote.max_attempts", c.remote.max_attempts);
  c.remote.initial_backoff = std::chrono::milliseconds(number<long>(kv, "remote.backoff_ms", c.remote.initial_backoff.count()));
  c.remote.timeout = std::chrono::seconds(number<long>(kv, "remote.timeout_s", c.remote.timeout.count()));
  c.remote.max_in_flight = number<int>(kv, "remote.max_in_flight", c.remote.max_in_flight);
  if (c.remote.max_attempts < 1) bad("remote.max_attempts", str("remote.max_attempts", ""), "must be at least 1");
  if (c.remote.max_in_flight < 1) bad("remote.max_in_flight", str("remote.max_in_flight", ""), "must be at least 1");

  c.horizon_days = number<int>(kv, "horizon_days", c.horizon_days);
  if (c.horizon_days < 1) bad("horizon_days", str("horizon_days", ""), "must be positive");
  if (const auto it = kv.find("thresholds"); it != kv.end()) {
    const auto parts = split_list(it->second);
    if (parts.size() != 4) bad("thresholds", it->second, "expected four comma-separated cuts");
    for (std::size_t i = 0; i < 4; ++i) {
      KeyValues one = {{"t", parts[i]}};
      c.thresholds.cuts[i] = number<double>(one, "t", 0.0);
    }
    if (!std::is_sorted(c.thresholds.cuts.begin(), c.thresholds.cuts.end(), std::less_equal<>())) {
      throw Error(ErrorCode::kBadThresholds, fmt::format("thresholds '{}' are not strictly ascending", it->second));
    }
  }
  c.per_sector = number<std::size_t>(kv, "per_sector", c.per_sector);
  if (const auto it = kv.find("test_after"); it != kv.end()) {
    const auto d = parse_iso_date(it->second);
    if (!d) bad("test_after", it->second, "expected yyyy-mm-dd");
    c.test_after = *d;
  }

  c.tau = number<double>(kv, "tau", c.tau);
  c.lookback = number<std::size_t>(kv, "lookback", c.lookback);
  if (c.lookback < 2) bad("lookback", str("lookback", ""), "needs at least two points");

  if (const auto it = kv.find("fact_range"); it != kv.end()) c.fact_range = parse_fact_range(it->second);
  c.max_reflections = number<int>(kv, "max_reflections", c.max_reflections);
  c.max_retries = number<int>(kv, "max_retries", c.max_retries);
  if (c.max_reflections < 0) bad("max_reflections", str("max_reflections", ""), "must be nonnegative");
  if (c.max_retries < 0) bad("max_retries", str("max_retries", ""), "must be nonnegative");
  c.enforce_distinct = boolean(kv, "enforce_distinct", c.enforce_distinct);
  c.history_char_budget = number<std::size_t>(kv, "history_char_budget", c.history_char_budget);
  c.workers = number<int>(kv, "workers", c.workers);
  if (c.workers < 1) bad("workers", str("workers", ""), "must be at least 1");

  c.all_pairs = boolean(kv, "all_pairs", c.all_pairs);
  c.sft = train_config(kv, "sft", c.sft, c.seed);
  c.reward = train_config(kv, "rm", c.reward, c.seed);
  learn::RlConfig rl = c.rl;
  static_cast<learn::TrainConfig&>(rl) = train_config(kv, "rl", c.rl, c.seed);
  rl.beta = number<double>(kv, "rl.beta", c.rl.beta);
  if (!(rl.beta >= 0.0)) bad("rl.beta", str("rl.beta", ""), "must be nonnegative");
  if (const auto it = kv.find("rl.penalty"); it != kv.end()) {
    if (it->second == "ratio") {
      rl.penalty = learn::Penalty::kRatio;
    } else if (it->second == "log_ratio") {
      rl.penalty = learn::Penalty::kLogRatio;
    } else {
      bad("rl.penalty", it->second, "expected ratio or log_ratio");
    }
  }
  c.rl = rl;

  if (const auto it = kv.find("sweep_ranges"); it != kv.end()) {
    for (const auto& r : split_list(it->second)) c.sweep_ranges.push_back(parse_fact_range(r));
    if (c.sweep_ranges.empty()) bad("sweep_ranges", it->second, "no ranges given");
  } else {
    c.sweep_ranges = {{3, 6}, {6, 10}, {10, 15}};
  }
  c.top_k = number<int>(kv, "top_k", c.top_k);
  if (c.top_k < 1) bad("top_k", str("top_k", ""), "must be at least 1");

  c.hash = config_hash(kv);
  return c;
}

std::string config_hash(const KeyValues& kv) {
  auto content = [](const fs::path& p) -> std::string {
    if (fs::is_directory(p)) return "tree:" + hash_tree(p);
    if (fs::is_regular_file(p)) return "file:" + sha256_hex(read_text_file(p));
    return "missing:" + p.filename().string();
  };
  std::string canonical;
  for (const auto& [key, value] : kv) {
    if (key == "output_dir") continue;
    std::string v = value;
    if (is_path_key(key) && !value.empty()) {
      v = content(value);
    } else if (key == "backend" && value.rfind("scripted:", 0) == 0) {
      v = "scripted:" + content(value.substr(9));
    }
    canonical += fmt::format("{}={}\n", key, v);
  }
  return sha256_hex(canonical);
}

}  // namespace structex::config

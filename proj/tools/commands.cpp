// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <iostream>
#include <map>
#include <memory>

#include <fmt/format.h>

#include "structex/backend.hpp"
#include "structex/corpus.hpp"
#include "structex/demo.hpp"
#include "structex/error.hpp"
#include "structex/eval.hpp"
#include "structex/facttable.hpp"
#include "structex/hashing.hpp"
#include "structex/jsonl.hpp"
#include "structex/learn.hpp"
#include "structex/reflect.hpp"

namespace structex::cli {
namespace {

namespace fs = std::filesystem;

// Collects a stage's outputs in memory and writes them, plus a manifest,
// only once the stage has succeeded. A failure while writing removes what
// this stage already wrote.
class Stage {
 public:
  Stage(std::string name, const config::RunConfig& cfg) : name_(std::move(name)), cfg_(cfg) {
    if (cfg.output_dir.empty()) throw Error(ErrorCode::kConfig, "output_dir is not set (use --output)");
  }

  [[nodiscard]] fs::path path(const std::string& file) const { return cfg_.output_dir / file; }

  // An output of an earlier stage; must exist.
  fs::path require(const std::string& file) {
    const auto p = path(file);
    if (!fs::exists(p)) {
      throw Error(ErrorCode::kIo, fmt::format("{} needs {} (run the earlier stage first)", name_, p.string()));
    }
    input(p);
    return p;
  }

  void input(const fs::path& p) {
    inputs_[p.filename().string()] = fs::is_directory(p) ? hash_tree(p) : sha256_hex(read_text_file(p));
  }

  void write(const std::string& file, std::string content) { outputs_[file] = std::move(content); }
  void write_jsonl(const std::string& file, const std::vector<Json>& records) { write(file, to_jsonl(records)); }

  void finish() {
    fs::create_directories(cfg_.output_dir);
    Json manifest = {{"stage", name_}, {"seed", cfg_.seed}, {"config_hash", cfg_.hash}};
    manifest["inputs"] = Json::object();
    for (const auto& [k, v] : inputs_) manifest["inputs"][k] = v;
    manifest["outputs"] = Json::object();
    std::vector<fs::path> written;
    try {
      for (const auto& [file, content] : outputs_) {
        write_text_file(path(file), content);
        written.push_back(path(file));
        manifest["outputs"][file] = sha256_hex(content);
      }
      write_text_file(path(name_ + ".manifest.json"), manifest.dump(2) + "\n");
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      throw;
    }
    std::cout << fmt::format("{}: wrote {} file(s) to {}\n", name_, outputs_.size() + 1, cfg_.output_dir.string());
  }

 private:
  std::string name_;
  const config::RunConfig& cfg_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

struct BackendHandle {
  std::unique_ptr<backend::LlmBackend> llm;
  std::shared_ptr<backend::AuditLog> audit;

  void write_audit(Stage& stage, const std::string& name) const {
    if (audit) stage.write_jsonl(name + ".audit.jsonl", audit->to_jsonl_records());
  }
};

BackendHandle make_backend(const config::RunConfig& cfg, Stage& stage) {
  if (!cfg.backend) throw Error(ErrorCode::kConfig, "no backend configured (use --backend scripted:<path> or remote)");
  BackendHandle h;
  if (cfg.backend->kind == config::BackendSpec::Kind::kScripted) {
    stage.input(cfg.backend->script);
    h.llm = std::make_unique<backend::ScriptedBackend>(backend::ScriptedBackend::load(cfg.backend->script));
  } else {
    h.audit = std::make_shared<backend::AuditLog>();
    h.llm = std::make_unique<backend::RemoteBackend>(cfg.remote, h.audit);
  }
  return h;
}

backend::TemplateSet templates_for(const config::RunConfig& cfg, Stage& stage) {
  if (cfg.templates.empty()) return backend::default_templates();
  stage.input(cfg.templates);
  return backend::load_templates(cfg.templates);
}

reflect::ReflectOptions reflect_options(const config::RunConfig& cfg) {
  reflect::ReflectOptions o;
  o.range = cfg.fact_range;
  o.max_reflections = cfg.max_reflections;
  o.max_retries = cfg.max_retries;
  o.enforce_distinct = cfg.enforce_distinct;
  o.history_char_budget = cfg.history_char_budget;
  return o;
}

fs::path corpus_path(const config::RunConfig& cfg, const GlobalOptions& options) {
  const auto p = options.input.empty() ? cfg.corpus : fs::absolute(options.input);
  if (p.empty()) throw Error(ErrorCode::kConfig, "no corpus configured (set corpus or pass --input)");
  return p;
}

std::vector<facttable::TableRecord> labeled_records(Stage& stage) {
  auto records = facttable::load_table_records(stage.require("facts.jsonl"));
  std::vector<facttable::TableRecord> labeled;
  for (auto& r : records) {
    if (r.gold) {
      labeled.push_back(std::move(r));
    } else {
      std::cerr << fmt::format("warning: {} has no gold label and is skipped\n", r.instance_id);
    }
  }
  return labeled;
}

std::vector<Json> jsonl_of(const auto& items) {
  std::vector<Json> out;
  for (const auto& item : items) out.push_back(reflect::to_json(item));
  return out;
}

}  // namespace

config::RunConfig load_run_config(const GlobalOptions& options) {
  config::KeyValues kv;
  if (!options.config_file.empty()) kv = config::load_config_file(options.config_file);
  const auto cwd = fs::current_path();
  if (options.seed) config::set_value(kv, "seed", std::to_string(*options.seed), cwd);
  if (!options.backend.empty()) config::set_value(kv, "backend", options.backend, cwd);
  if (!options.output_dir.empty()) config::set_value(kv, "output_dir", options.output_dir.string(), cwd);
  for (const auto& o : options.overrides) config::apply_override(kv, o, cwd);
  return config::resolve(kv);
}

int cmd_split(const config::RunConfig& cfg, const GlobalOptions& options) {
  Stage stage("split", cfg);
  const auto path = corpus_path(cfg, options);
  stage.input(path);
  const auto transcripts = corpus::load_transcripts(path);
  corpus::SplitOptions so;
  so.per_sector = cfg.per_sector;
  so.test_after = cfg.test_after;
  so.seed = cfg.seed;
  const auto split = corpus::split_corpus(transcripts, so);
  for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
  std::vector<Json> train, test;
  for (const auto& t : split.train) train.push_back(corpus::to_json(t));
  for (const auto& t : split.test) test.push_back(corpus::to_json(t));
  stage.write_jsonl("train.jsonl", train);
  stage.write_jsonl("test.jsonl", test);
  stage.finish();
  return 0;
}

int cmd_distill(const config::RunConfig& cfg, const GlobalOptions& options) {
  Stage stage("distill", cfg);
  const auto path = corpus_path(cfg, options);
  stage.input(path);
  const auto transcripts = corpus::load_transcripts(path);
  corpus::PriceBook book;
  if (!cfg.prices.empty()) {
    stage.input(cfg.prices);
    book = corpus::build_price_book(corpus::load_prices(cfg.prices));
  }
  auto h = make_backend(cfg, stage);
  const auto templates = templates_for(cfg, stage);

  facttable::DistillOptions opts;
  opts.tau = cfg.tau;
  opts.lookback = cfg.lookback;
  opts.max_in_flight = cfg.workers;
  std::vector<Json> records, reports;
  std::size_t violations = 0;
  for (const auto& t : transcripts) {
    const auto it = book.find(t.ticker);
    const corpus::PriceSeries* prices = it == book.end() ? nullptr : &it->second;
    auto d = facttable::distill(t, *h.llm, templates.fact_table, opts, prices);
    facttable::TableRecord rec{t.instance_id(), std::move(d.table), std::nullopt};
    if (prices) {
      try {
        rec.gold = corpus::derive_label(*prices, t.call_date, cfg.horizon_days, cfg.thresholds);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMissingPrice) throw;
        std::cerr << fmt::format("warning: {}: {}\n", rec.instance_id, e.what());
      }
    } else if (!cfg.prices.empty()) {
      std::cerr << fmt::format("warning: {}: no prices for {}\n", rec.instance_id, t.ticker);
    }
    violations += d.report.budget_violations();
    records.push_back(facttable::to_json(rec));
    reports.push_back(facttable::to_json(d.report));
  }
  if (violations > 0) std::cerr << fmt::format("warning: {} speech(es) outside their fact budget\n", violations);
  stage.write_jsonl("facts.jsonl", records);
  stage.write_jsonl("distill_report.jsonl", reports);
  h.write_audit(stage, "distill");
  stage.finish();
  return 0;
}

int cmd_decide(const config::RunConfig& cfg) {
  Stage stage("decide", cfg);
  const auto records = facttable::load_table_records(stage.require("facts.jsonl"));
  auto h = make_backend(cfg, stage);
  const auto templates = templates_for(cfg, stage);
  std::vector<Json> out;
  for (const auto& r : records) {
    const auto resp = reflect::decide_once(r.table, *h.llm, templates.decision, cfg.fact_range);
    Json rec = {{"instance_id", r.instance_id},
                {"decision", short_code(resp.explanation.decision)},
                {"explanation", explanation::render_explanation(resp.explanation)},
                {"response", resp.raw}};
    if (r.gold) {
      rec["gold"] = short_code(*r.gold);
      rec["correct"] = *r.gold == resp.explanation.decision;
    }
    out.push_back(std::move(rec));
  }
  stage.write_jsonl("decisions.jsonl", out);
  h.write_audit(stage, "decide");
  stage.finish();
  return 0;
}

int cmd_reflect(const config::RunConfig& cfg) {
  Stage stage("reflect", cfg);
  const auto records = labeled_records(stage);
  auto h = make_backend(cfg, stage);
  const auto templates = templates_for(cfg, stage);
  const auto traces = reflect::run_traces(records, *h.llm, templates, reflect_options(cfg), cfg.workers);
  const auto solved = std::count_if(traces.begin(), traces.end(), [](const auto& t) { return t.solved(); });
  std::cout << fmt::format("reflect: {} of {} traces solved\n", solved, traces.size());
  stage.write_jsonl("traces.jsonl", jsonl_of(traces));
  h.write_audit(stage, "reflect");
  stage.finish();
  return 0;
}

int cmd_build_datasets(const config::RunConfig& cfg) {
  Stage stage("build-datasets", cfg);
  const auto traces = reflect::load_traces(stage.require("traces.jsonl"));
  const auto data = reflect::build_datasets(traces, {cfg.all_pairs});
  stage.write_jsonl("demonstrations.jsonl", jsonl_of(data.demonstrations));
  stage.write_jsonl("comparisons.jsonl", jsonl_of(data.comparisons));
  std::cout << fmt::format("build-datasets: {} demonstrations, {} comparisons\n", data.demonstrations.size(),
                           data.comparisons.size());
  stage.finish();
  return 0;
}

int cmd_train_rm(const config::RunConfig& cfg) {
  Stage stage("train-rm", cfg);
  std::vector<learn::PreferencePair> pairs;
  for (const auto& node : read_jsonl(stage.require("comparisons.jsonl"))) {
    pairs.push_back(learn::to_preference_pair(reflect::comparison_from_json(node)));
  }
  const auto result = learn::fit_reward(pairs, cfg.reward);
  stage.write("reward_model.txt", learn::format_reward_model(result.model, {{"seed", std::to_string(cfg.seed)},
                                                                            {"pairs", std::to_string(pairs.size())}}));
  stage.write("reward_history.tsv", learn::format_history(result.history, "loss"));
  stage.finish();
  return 0;
}

int cmd_train_policy(const config::RunConfig& cfg) {
  Stage stage("train-policy", cfg);
  std::vector<reflect::Demonstration> demos;
  for (const auto& node : read_jsonl(stage.require("demonstrations.jsonl"))) {
    demos.push_back(reflect::demonstration_from_json(node));
  }
  const auto reward = learn::load_reward_model(stage.require("reward_model.txt"));
  std::vector<learn::SftExample> examples;
  std::vector<learn::PolicyContext> contexts;
  for (const auto& d : demos) {
    examples.push_back(learn::to_sft_example(d));
    contexts.push_back(learn::to_policy_context(d.input, d.output, reward));
  }
  const auto sft = learn::fit_sft(examples, cfg.sft);
  if (sft.degenerate) std::cerr << "warning: every demonstration has the same decision\n";
  const auto rl = learn::optimize_policy(sft.policy, contexts, cfg.rl);
  const learn::ModelHeader header = {{"seed", std::to_string(cfg.seed)}, {"examples", std::to_string(demos.size())}};
  stage.write("sft_policy.txt", learn::format_policy(sft.policy, header));
  stage.write("sft_history.tsv", learn::format_history(sft.history, "loss"));
  stage.write("policy.txt", learn::format_policy(rl.policy, header));
  stage.write("rl_history.tsv", learn::format_history(rl.history, "objective"));
  stage.finish();
  return 0;
}

int cmd_evaluate(const config::RunConfig& cfg) {
  Stage stage("evaluate", cfg);
  const auto traces = reflect::load_traces(stage.require("traces.jsonl"));
  if (traces.empty()) throw Error(ErrorCode::kInvalidInput, "no traces to evaluate");
  std::vector<Decision> gold;
  for (const auto& t : traces) gold.push_back(t.gold);

  std::string text;
  std::vector<Json> lines;
  auto add = [&](const std::string& system, std::span<const Decision> pred) {
    const auto report = eval::macro_metrics(gold, pred);
    text += fmt::format("== {} ==\n{}\n", system, eval::format_metrics(report));
    auto j = eval::to_json(report);
    j["system"] = system;
    lines.push_back(std::move(j));
  };
  for (int r = 0; r <= cfg.max_reflections; ++r) {
    std::vector<Decision> pred;
    for (const auto& t : traces) pred.push_back(eval::decision_at_round(t, r));
    add(fmt::format("round {}", r), pred);
    stage.write(fmt::format("confusion_round_{}.csv", r), eval::confusion_csv(eval::confusion_by_round(traces, r)));
  }
  for (const auto& [file, system] : {std::pair{"sft_policy.txt", "sft policy"}, std::pair{"policy.txt", "rl policy"}}) {
    if (!fs::exists(stage.path(file))) continue;
    const auto policy = learn::load_policy(stage.require(file));
    std::vector<Decision> pred;
    for (const auto& t : traces) pred.push_back(policy.predict(learn::input_features(t.table)));
    add(system, pred);
  }
  const auto dist = eval::class_distribution(gold);
  const double uniform = eval::random_baseline(dist, eval::BaselineScheme::kUniform);
  const double matched = eval::random_baseline(dist, eval::BaselineScheme::kMatched);
  text += fmt::format("random baseline (uniform)  {:.2f}\nrandom baseline (matched)  {:.2f}\n", 100 * uniform,
                      100 * matched);
  lines.push_back({{"system", "random baseline"}, {"uniform", uniform}, {"matched", matched}});
  stage.write("metrics.txt", text);
  stage.write_jsonl("metrics.jsonl", lines);
  stage.finish();
  return 0;
}

int cmd_paths(const config::RunConfig& cfg) {
  Stage stage("paths", cfg);
  const auto traces = reflect::load_traces(stage.require("traces.jsonl"));
  const auto report = eval::mine_paths(traces, cfg.top_k);
  stage.write("paths.txt", eval::format_paths(report));
  stage.write_jsonl("paths.jsonl", eval::paths_to_jsonl(report));
  stage.finish();
  return 0;
}

int cmd_stats(const config::RunConfig& cfg) {
  Stage stage("stats", cfg);
  const auto traces = reflect::load_traces(stage.require("traces.jsonl"));
  std::vector<explanation::StructuredExplanation> explanations;
  std::vector<facttable::FactTable> tables;
  for (const auto& t : traces) {
    if (t.attempts.empty()) continue;
    explanations.push_back(t.attempts.back().explanation);
    tables.push_back(t.table);
  }
  const auto report = explanation::fact_statistics(explanations, tables);
  stage.write("stats.txt", explanation::format_stats(report));
  stage.write("stats.json", explanation::to_json(report).dump(2) + "\n");
  stage.finish();
  return 0;
}

int cmd_sweep(const config::RunConfig& cfg) {
  Stage stage("sweep", cfg);
  const auto records = labeled_records(stage);
  auto h = make_backend(cfg, stage);
  const auto templates = templates_for(cfg, stage);
  const auto curves = eval::sweep_fact_ranges(records, *h.llm, templates, cfg.sweep_ranges, reflect_options(cfg),
                                              cfg.workers);
  stage.write("sweep.txt", eval::format_sweep(curves));
  stage.write_jsonl("sweep.jsonl", eval::sweep_to_jsonl(curves));
  h.write_audit(stage, "sweep");
  stage.finish();
  return 0;
}

int cmd_pipeline(const config::RunConfig& cfg, const GlobalOptions& options) {
  for (auto step : {+[](const config::RunConfig& c, const GlobalOptions& o) { return cmd_distill(c, o); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_decide(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_reflect(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_build_datasets(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_train_rm(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_train_policy(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_evaluate(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_paths(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_stats(c); },
                    +[](const config::RunConfig& c, const GlobalOptions&) { return cmd_sweep(c); }}) {
    if (const int rc = step(cfg, options); rc != 0) return rc;
  }
  return 0;
}

int cmd_make_demo(const DemoCommand& options) {
  demo::DemoOptions opts;
  opts.seed = options.seed;
  opts.instances = options.instances;
  const auto files = demo::write_demo(options.output_dir, opts);
  std::cout << fmt::format("make-demo: wrote {}, {}, {} and {}\n", files.transcripts.string(), files.prices.string(),
                           files.script.string(), files.config.string());
  return 0;
}

}  // namespace structex::cli

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "structex/config.hpp"

namespace structex::cli {

// Options shared by every pipeline subcommand.
struct GlobalOptions {
  std::filesystem::path config_file;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::filesystem::path output_dir;
  std::filesystem::path input;  // corpus override for split / distill
  std::vector<std::string> overrides;
};

config::RunConfig load_run_config(const GlobalOptions& options);

// Each returns the process exit code.
int cmd_split(const config::RunConfig& cfg, const GlobalOptions& options);
int cmd_distill(const config::RunConfig& cfg, const GlobalOptions& options);
int cmd_decide(const config::RunConfig& cfg);
int cmd_reflect(const config::RunConfig& cfg);
int cmd_build_datasets(const config::RunConfig& cfg);
int cmd_train_rm(const config::RunConfig& cfg);
int cmd_train_policy(const config::RunConfig& cfg);
int cmd_evaluate(const config::RunConfig& cfg);
int cmd_paths(const config::RunConfig& cfg);
int cmd_stats(const config::RunConfig& cfg);
int cmd_sweep(const config::RunConfig& cfg);
int cmd_pipeline(const config::RunConfig& cfg, const GlobalOptions& options);

struct DemoCommand {
  std::filesystem::path output_dir;
  std::uint64_t seed = 7;
  std::size_t instances = 24;
};

int cmd_make_demo(const DemoCommand& options);

}  // namespace structex::cli

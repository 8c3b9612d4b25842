// Copyright 2026 The mmrecun Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmrecun/config.hpp"
#include "mmrecun/graph.hpp"
#include "mmrecun/metrics.hpp"
#include "mmrecun/synth.hpp"
#include "mmrecun/unlearn.hpp"

// Command implementations behind the `mmrecun` executable. Every command
// reads an ExperimentConfig and writes its artifacts into `out`.
namespace mmrecun::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

int exit_code_for(const std::exception& e);

// Data loaded once per command: graph, deterministic split, and the
// partition when the config names a forget spec.
struct Experiment {
  InteractionGraph graph;
  DatasetSplit split;
  std::optional<Partition> partition;
};

Experiment load_experiment(const ExperimentConfig& config);
TrainConfig make_train_config(const ExperimentConfig& config, Mode mode);

void cmd_synth(const SynthOptions& options, const std::filesystem::path& out);
void cmd_train(const ExperimentConfig& config);
void cmd_gold(const ExperimentConfig& config);
// `method` is "mmrecun" or "amun". With `alpha_sweep` set, one run per
// alpha is written to out/alpha_<value>/.
void cmd_unlearn(const ExperimentConfig& config, const std::string& method);
// `view` is "user", "item" or "both"; `gold` (or gold_checkpoint in the
// config) additionally writes property gaps.
void cmd_evaluate(const ExperimentConfig& config, const std::string& view,
                  const std::optional<std::filesystem::path>& gold);
void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out);

// Shared by the commands and by tests that compare against in-process runs.
std::string run_json(const RunResult& result, const std::string& model, Mode mode,
                     const ExperimentConfig& config);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mmrecun::cli

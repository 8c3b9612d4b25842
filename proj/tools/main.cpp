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
#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mmrecun/commands.hpp"
#include "mmrecun/errors.hpp"

namespace fs = std::filesystem;
using namespace mmrecun;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;

  void attach(CLI::App* app, bool config_required) {
    auto* opt = app->add_option("--config", config, "experiment config (key = value)");
    if (config_required) opt->required();
    app->add_option("--seed", seed, "override the config seed");
    app->add_option("--threads", threads, "worker threads (1 = bit-deterministic)");
    app->add_option("--out", out, "output directory");
  }

  ExperimentConfig load() const {
    ExperimentConfig cfg = ExperimentConfig::load(config);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (threads) cfg.set("threads", std::to_string(*threads));
    if (!out.empty()) cfg.set("out", out);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modal recommender training and unlearning"};
  app.require_subcommand(1);

  SynthOptions synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-cluster dataset");
  synth_cmd->add_option("--users", synth.users)->capture_default_str();
  synth_cmd->add_option("--items", synth.items)->capture_default_str();
  synth_cmd->add_option("--modalities", synth.modalities)->capture_default_str();
  synth_cmd->add_option("--density", synth.density)->capture_default_str();
  synth_cmd->add_option("--groups", synth.groups)->capture_default_str();
  synth_cmd->add_option("--affinity", synth.affinity)->capture_default_str();
  synth_cmd->add_option("--feature-dim", synth.feature_dim)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out)->required();

  CommonFlags train_flags, gold_flags, unlearn_flags, eval_flags;
  auto* train_cmd = app.add_subcommand("train", "train the original model on D_T");
  train_flags.attach(train_cmd, true);
  auto* gold_cmd = app.add_subcommand("gold", "retrain from scratch on the retain set");
  gold_flags.attach(gold_cmd, true);

  auto* unlearn_cmd = app.add_subcommand("unlearn", "unlearn the forget set from a checkpoint");
  unlearn_flags.attach(unlearn_cmd, true);
  std::string method;
  unlearn_cmd->add_option("--method", method, "mmrecun or amun")
      ->check(CLI::IsMember({"mmrecun", "amun"}));

  auto* eval_cmd = app.add_subcommand("evaluate", "write ranking reports for a checkpoint");
  eval_flags.attach(eval_cmd, true);
  std::string view;
  std::string gold_path;
  eval_cmd->add_option("--view", view, "user, item or both (default: config view, else both)")
      ->check(CLI::IsMember({"user", "item", "both"}));
  eval_cmd->add_option("--gold", gold_path, "gold checkpoint; also writes property gaps");

  auto* report_cmd = app.add_subcommand("report", "flatten run directories into CSV tables");
  std::vector<std::string> run_dirs;
  std::string report_out = ".";
  report_cmd->add_option("run_dirs", run_dirs, "run directories");
  report_cmd->add_option("--out", report_out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfig;
  }

  try {
    if (*synth_cmd) {
      cli::cmd_synth(synth, synth_out);
    } else if (*train_cmd) {
      cli::cmd_train(train_flags.load());
    } else if (*gold_cmd) {
      cli::cmd_gold(gold_flags.load());
    } else if (*unlearn_cmd) {
      ExperimentConfig cfg = unlearn_flags.load();
      if (method.empty()) method = cfg.get_or("method", "mmrecun");
      cli::cmd_unlearn(cfg, method);
    } else if (*eval_cmd) {
      std::optional<fs::path> gold;
      if (!gold_path.empty()) gold = gold_path;
      ExperimentConfig cfg = eval_flags.load();
      if (view.empty()) view = cfg.get_or("view", "both");
      cli::cmd_evaluate(cfg, view, gold);
    } else if (*report_cmd) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      cli::cmd_report(dirs, report_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return cli::kExitOk;
}

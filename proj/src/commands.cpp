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
#include "mmrecun/commands.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mmrecun/errors.hpp"
#include "mmrecun/model.hpp"

namespace mmrecun::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kExitNumeric;
  if (dynamic_cast<const Error*>(&e) != nullptr) return kExitData;
  return kExitInternal;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Experiment load_experiment(const ExperimentConfig& config) {
  Experiment ex;
  ex.graph = load_interactions(config.get("interactions"), config.feature_paths());
  ex.split = split_dataset(ex.graph, config.get_u64("seed", 0));
  if (config.has("forget_spec")) {
    ex.partition = mark_forget(ex.split, load_forget_spec(config.get("forget_spec"), ex.graph));
  }
  return ex;
}

TrainConfig make_train_config(const ExperimentConfig& config, Mode mode) {
  TrainConfig tc;
  tc.hyper = config.hyper();
  tc.seed = config.get_u64("seed", 0);
  tc.mode = mode;
  tc.threads = config.get_int("threads", 1);
  if (tc.threads < 1) throw ConfigError("threads must be >= 1");
  tc.stop_at_chance = config.get_bool("stop_at_chance", false);
  if (config.get_bool("verbose", false)) {
    tc.on_epoch = [](const EpochLog& log) {
      std::fprintf(stderr, "epoch %d loss %.6f valid_recall@20 %.4f forget_auc %.4f\n", log.epoch,
                   log.loss, log.valid_recall, log.forget_auc);
    };
  }
  return tc;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

std::string history_csv(const RunResult& r) {
  std::ostringstream out;
  out << "epoch,loss,valid_recall,forget_auc\n";
  for (const EpochLog& h : r.history) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.6f,%.6f\n", h.epoch, h.loss, h.valid_recall,
                  h.forget_auc);
    out << buf;
  }
  return out.str();
}

std::string divergence_csv(const RunResult& r) {
  std::ostringstream out;
  out << "epoch,beta\n";
  for (const auto& [epoch, beta] : r.divergence_curve) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d,%.9g\n", epoch, beta);
    out << buf;
  }
  return out.str();
}

std::string ids_json(const InteractionGraph& g) {
  nlohmann::ordered_json doc;
  doc["users"] = g.user_ids;
  doc["items"] = g.item_ids;
  return doc.dump() + "\n";
}

void write_run(const fs::path& dir, const RunResult& result, const std::string& model, Mode mode,
               const ExperimentConfig& config, const InteractionGraph& graph) {
  fs::create_directories(dir);
  save_checkpoint(dir / "checkpoint.mmck", result.params);
  write_text(dir / "run.json", run_json(result, model, mode, config));
  write_text(dir / "history.csv", history_csv(result));
  write_text(dir / "ids.json", ids_json(graph));
  if (!result.divergence_curve.empty()) write_text(dir / "divergence.csv", divergence_csv(result));
}

const Partition& require_partition(const Experiment& ex) {
  if (!ex.partition) throw ConfigError("this command needs forget_spec");
  return *ex.partition;
}

}  // namespace

std::string run_json(const RunResult& result, const std::string& model, Mode mode,
                     const ExperimentConfig& config) {
  nlohmann::ordered_json doc;
  doc["model"] = model;
  doc["mode"] = to_string(mode);
  doc["seed"] = config.get_u64("seed", 0);
  if (mode == Mode::kMmrecun) doc["alpha"] = config.hyper().alpha;
  doc["epochs_run"] = result.epochs_run;
  doc["wall_time"] = result.wall_time;
  doc["stop_reason"] = result.stop_reason;
  doc["best_epoch"] = result.best_epoch;
  doc["best_valid_recall"] = result.best_valid_recall;
  return doc.dump(2) + "\n";
}

void cmd_synth(const SynthOptions& options, const fs::path& out) {
  write_synthetic_dataset(generate_synthetic(options), options, out);
}

void cmd_train(const ExperimentConfig& config) {
  config.require({"interactions", "out"});
  const Experiment ex = load_experiment(config);
  const RunResult r = train(ex.graph, ex.split, make_train_config(config, Mode::kTrain));
  write_run(config.get("out"), r, config.get_or("model_name", "original"), Mode::kTrain, config,
            ex.graph);
}

void cmd_gold(const ExperimentConfig& config) {
  config.require({"interactions", "forget_spec", "out"});
  const Experiment ex = load_experiment(config);
  const RunResult r = retrain_gold(ex.graph, ex.split, require_partition(ex),
                                   make_train_config(config, Mode::kGold));
  write_run(config.get("out"), r, config.get_or("model_name", "gold"), Mode::kGold, config,
            ex.graph);
}

void cmd_unlearn(const ExperimentConfig& config, const std::string& method) {
  config.require({"interactions", "forget_spec", "checkpoint", "out"});
  const Mode mode = mode_from_string(method);
  if (mode != Mode::kMmrecun && mode != Mode::kAmun) {
    throw ConfigError("unlearn --method must be mmrecun or amun");
  }
  const Experiment ex = load_experiment(config);
  const Partition& partition = require_partition(ex);
  if (partition.forget.empty()) throw ConfigError("forget set is empty; nothing to unlearn");
  const ModelParams initial = load_checkpoint(config.get("checkpoint"));
  std::optional<ModelParams> reference;
  if (config.has("gold_checkpoint")) reference = load_checkpoint(config.get("gold_checkpoint"));
  const ModelParams* ref = reference ? &*reference : nullptr;

  auto run_one = [&](const ExperimentConfig& cfg, const fs::path& dir) {
    const TrainConfig tc = make_train_config(cfg, mode);
    const RunResult r = mode == Mode::kMmrecun
                            ? unlearn_mmrecun(ex.graph, ex.split, partition, initial, tc, ref)
                            : unlearn_amun(ex.graph, ex.split, partition, initial, tc, ref);
    write_run(dir, r, cfg.get_or("model_name", method), mode, cfg, ex.graph);
  };

  if (config.has("alpha_sweep")) {
    if (mode != Mode::kMmrecun) throw ConfigError("alpha_sweep applies to mmrecun only");
    for (double alpha : config.get_double_list("alpha_sweep", {})) {
      ExperimentConfig cfg = config;
      cfg.set("alpha", format_double(alpha));
      const std::string name = "alpha_" + format_double(alpha);
      if (!config.has("model_name")) cfg.set("model_name", "mmrecun_" + name);
      run_one(cfg, fs::path(config.get("out")) / name);
    }
    return;
  }
  run_one(config, config.get("out"));
}

void cmd_evaluate(const ExperimentConfig& config, const std::string& view,
                  const std::optional<fs::path>& gold) {
  config.require({"interactions", "checkpoint", "out"});
  if (view != "user" && view != "item" && view != "both") {
    throw ConfigError("--view must be user, item or both");
  }
  const Experiment ex = load_experiment(config);
  const Partition* partition = ex.partition ? &*ex.partition : nullptr;
  const std::string serve_on = config.get_or("serve_on", partition != nullptr ? "retain" : "train");
  if (serve_on != "train" && serve_on != "retain") throw ConfigError("serve_on must be train or retain");
  if (serve_on == "retain" && partition == nullptr) throw ConfigError("serve_on = retain needs forget_spec");
  const EdgeList& serving_edges = serve_on == "retain" ? partition->retain : ex.split.train;
  const HyperParams hyper = config.hyper();
  const Recommender net(ex.graph, serving_edges, hyper.layers);
  const int threads = config.get_int("threads", 1);

  auto state_of = [&](const fs::path& ckpt) {
    const ModelParams p = load_checkpoint(ckpt);
    if (p.user_emb.rows() != ex.graph.num_users || p.item_emb.rows() != ex.graph.num_items) {
      throw ShapeError("checkpoint " + ckpt.string() + " does not match the dataset node counts");
    }
    return net.forward(p).state;
  };
  const PropagatedState state = state_of(config.get("checkpoint"));
  std::optional<fs::path> gold_path = gold;
  if (!gold_path && config.has("gold_checkpoint")) gold_path = config.get("gold_checkpoint");
  std::optional<PropagatedState> gold_state;
  if (gold_path) gold_state = state_of(*gold_path);

  const fs::path out = config.get("out");
  std::vector<std::pair<std::string, View>> views;
  if (view != "item") views.emplace_back("user", View::kUserCentric);
  if (view != "user") views.emplace_back("item", View::kItemCentric);
  for (const auto& [tag, v] : views) {
    const std::vector<int> ks = v == View::kUserCentric
                                    ? config.get_int_list("topk_user", {5, 10, 20, 50})
                                    : config.get_int_list("topk_item", {500, 1000, 1500});
    const EvalReport report = evaluate(state, ex.split, partition, ks, v, threads);
    write_text(out / ("report_" + tag + ".json"), to_json(report));
    if (gold_state) {
      const EvalReport gold_report = evaluate(*gold_state, ex.split, partition, ks, v, threads);
      write_text(out / ("gaps_" + tag + ".json"), to_json(property_gaps(report, gold_report)));
    }
  }
}

void cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out) {
  if (run_dirs.empty()) throw ConfigError("report: at least one run directory is required");
  std::ostringstream results, timing;
  results << "model,view,set,k,metric,value\n";
  timing << "model,mode,seed,epochs_run,wall_time\n";
  for (const fs::path& dir : run_dirs) {
    if (!fs::is_directory(dir)) throw FileError("malformed run dir " + dir.string() + ": not a directory");
    std::string model = dir.filename().string();
    if (model.empty()) model = dir.parent_path().filename().string();
    const fs::path run_file = dir / "run.json";
    bool found = false;
    if (fs::exists(run_file)) {
      try {
        const auto doc = nlohmann::json::parse(read_text(run_file));
        model = doc.at("model").get<std::string>();
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%d,%.6f\n", model.c_str(),
                      doc.at("mode").get<std::string>().c_str(),
                      static_cast<unsigned long long>(doc.at("seed").get<std::uint64_t>()),
                      doc.at("epochs_run").get<int>(), doc.at("wall_time").get<double>());
        timing << buf;
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed run dir " + dir.string() + ": run.json: " + e.what());
      }
      found = true;
    }
    for (const char* tag : {"user", "item"}) {
      const fs::path report_file = dir / (std::string("report_") + tag + ".json");
      if (!fs::exists(report_file)) continue;
      found = true;
      EvalReport report;
      try {
        report = parse_eval_report(read_text(report_file));
      } catch (const ParseError& e) {
        throw ParseError("malformed run dir " + dir.string() + ": " + e.what());
      }
      for (const auto& [set, per_k] : report.sets) {
        for (const auto& [k, m] : per_k) {
          const std::pair<const char*, double> values[] = {
              {"recall", m.recall}, {"precision", m.precision}, {"ndcg", m.ndcg}, {"map", m.map}};
          for (const auto& [metric, value] : values) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%s,%.6f\n", model.c_str(),
                          to_string(report.view), set.c_str(), k, metric, value);
            results << buf;
          }
        }
      }
    }
    if (!found) {
      throw FileError("malformed run dir " + dir.string() + ": no run.json or report_*.json");
    }
  }
  write_text(out / "results.csv", results.str());
  write_text(out / "timing.csv", timing.str());
}

}  // namespace mmrecun::cli

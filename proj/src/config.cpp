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
#include "mmrecun/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include "mmrecun/errors.hpp"

namespace mmrecun {

namespace {

constexpr std::array<std::string_view, 27> kKnownKeys{
    "interactions", "forget_spec",  "checkpoint",  "gold_checkpoint", "out",
    "seed",         "threads",      "method",      "view",            "model_name",
    "serve_on",     "dim",          "lr",          "lambda_c",        "lambda_l2",
    "tau",          "alpha",        "layers",      "batch_size",      "max_epochs",
    "patience",     "neg_per_pos",  "topk_user",   "topk_item",       "stop_at_chance",
    "alpha_sweep",  "verbose"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

bool ExperimentConfig::is_known_key(const std::string& key) {
  if (key.rfind("feature.", 0) == 0) return key.size() > 8;
  return std::find(kKnownKeys.begin(), kKnownKeys.end(), key) != kKnownKeys.end();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (cfg.has(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    cfg.set(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigError("unknown config key '" + key + "'");
  if (value.find('\n') != std::string::npos || value.find('#') != std::string::npos) {
    throw ConfigError("config key '" + key + "': value may not contain newlines or '#'");
  }
  values_[key] = trim(value);
}

bool ExperimentConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::string ExperimentConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

void ExperimentConfig::require(std::initializer_list<const char*> keys) const {
  for (const char* k : keys) get(k);
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
  return has(key) ? parse_number<int>(key, get(key)) : fallback;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_number<double>(key, get(key)) : fallback;
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_number<std::uint64_t>(key, get(key)) : fallback;
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key,
                                                const std::vector<int>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const auto& s : split_list(get(key))) out.push_back(parse_number<int>(key, s));
  if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key,
                                                      const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& s : split_list(get(key))) out.push_back(parse_number<double>(key, s));
  if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
  return out;
}

HyperParams ExperimentConfig::hyper() const {
  HyperParams h;
  h.dim = get_int("dim", h.dim);
  h.lr = get_double("lr", h.lr);
  h.lambda_c = get_double("lambda_c", h.lambda_c);
  h.lambda_l2 = get_double("lambda_l2", h.lambda_l2);
  h.tau = get_double("tau", h.tau);
  h.alpha = get_double("alpha", h.alpha);
  h.layers = get_int("layers", h.layers);
  h.batch_size = get_int("batch_size", h.batch_size);
  h.max_epochs = get_int("max_epochs", h.max_epochs);
  h.patience = get_int("patience", h.patience);
  h.neg_per_pos = get_int("neg_per_pos", h.neg_per_pos);
  h.topk_list = get_int_list("topk_user", h.topk_list);
  h.validate();
  return h;
}

std::map<std::string, std::filesystem::path> ExperimentConfig::feature_paths() const {
  std::map<std::string, std::filesystem::path> out;
  for (const auto& [k, v] : values_) {
    if (k.rfind("feature.", 0) == 0) out.emplace(k.substr(8), v);
  }
  return out;
}

}  // namespace mmrecun

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

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "mmrecun/model.hpp"

namespace mmrecun {

// `key = value` experiment file. Blank lines and `#` comments are ignored;
// unknown keys are rejected. Modality feature files use `feature.<id>`.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Canonical form: one `key = value` line per entry in key order.
  std::string serialize() const;

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  void require(std::initializer_list<const char*> keys) const;

  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  // Hyper-parameters with defaults for absent keys; validated.
  HyperParams hyper() const;
  std::map<std::string, std::filesystem::path> feature_paths() const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  bool operator==(const ExperimentConfig&) const = default;

  static bool is_known_key(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mmrecun

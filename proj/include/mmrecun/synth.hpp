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

#include "mmrecun/graph.hpp"

namespace mmrecun {

// Planted-cluster generator: users and items fall into latent groups and a
// within-group pair is `affinity` times likelier to interact than a
// cross-group pair. Item features are noisy copies of a per-group centroid.
struct SynthOptions {
  int users = 200;
  int items = 100;
  int modalities = 2;
  double density = 0.05;
  int groups = 5;
  double affinity = 10.0;
  int feature_dim = 32;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
};

// Indices already follow the order a reload of the written CSV assigns.
InteractionGraph generate_synthetic(const SynthOptions& options);

// Writes interactions.csv, one <modality>.mmft per modality, manifest.json
// and a ready-to-edit experiment.cfg into `dir`.
void write_synthetic_dataset(const InteractionGraph& graph, const SynthOptions& options,
                             const std::filesystem::path& dir);

}  // namespace mmrecun

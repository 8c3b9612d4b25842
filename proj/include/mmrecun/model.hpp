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

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmrecun/graph.hpp"

namespace mmrecun {

struct HyperParams {
  int dim = 64;
  double lr = 1e-3;
  double lambda_c = 0.01;     // contrastive weight
  double lambda_l2 = 1e-4;    // L2 weight on all trainable tensors
  double tau = 0.2;           // contrastive temperature
  double alpha = 0.3;         // preserve/impair balance
  int layers = 2;
  int batch_size = 2048;
  int max_epochs = 1000;
  int patience = 20;
  int neg_per_pos = 1;
  std::vector<int> topk_list{5, 10, 20, 50};

  void validate() const;
};

// Trainable tensors. Modality maps are keyed by modality id and iterate in
// name order, which fixes the tensor order everywhere (gradients, Adam,
// checkpoints).
struct ModelParams {
  Eigen::MatrixXd user_emb;                       // num_users x d
  Eigen::MatrixXd item_emb;                       // num_items x d
  std::map<std::string, Eigen::MatrixXd> proj;    // d x d_m
  Eigen::MatrixXd gate_weight;                    // d x d
  Eigen::RowVectorXd gate_bias;                   // 1 x d
  std::map<std::string, Eigen::RowVectorXd> attn; // 1 x d

  // Calls f(name, tensor) for every trainable tensor in canonical order.
  template <typename F>
  void visit(F&& f) {
    f(std::string("user_emb"), user_emb);
    f(std::string("item_emb"), item_emb);
    for (auto& [m, t] : proj) f("proj/" + m, t);
    f(std::string("gate_weight"), gate_weight);
    f(std::string("gate_bias"), gate_bias);
    for (auto& [m, t] : attn) f("attn/" + m, t);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<ModelParams*>(this)->visit(
        [&](const std::string& name, auto& t) { f(name, std::as_const(t)); });
  }

  int dim() const { return static_cast<int>(user_emb.cols()); }
  ModelParams zeros_like() const;
  double squared_norm() const;
  std::size_t size() const;
  bool all_finite() const;
  // this += scale * other
  void add_scaled(const ModelParams& other, double scale);
  void scale(double s);
  // Flattened view in canonical order, for tests and finite differences.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& v);
  bool same_shape(const ModelParams& other) const;
};

bool operator==(const ModelParams& a, const ModelParams& b);

// Xavier-uniform initialization of every tensor, deterministic in `seed`.
ModelParams init_params(const InteractionGraph& graph, const HyperParams& hyper,
                        std::uint64_t seed);

// mean_{l=0..L} A^l X0 with X0 = [user_emb; item_emb].
void propagate(const Eigen::MatrixXd& user_emb, const Eigen::MatrixXd& item_emb,
               const NormAdj& adj, int layers, Eigen::MatrixXd& user_beh,
               Eigen::MatrixXd& item_beh);

struct PropagatedState {
  Eigen::MatrixXd user_beh, item_beh;  // graph-propagated behavior embeddings
  Eigen::MatrixXd user_mul, item_mul;  // fused multi-modal embeddings
  Eigen::MatrixXd user_final, item_final;
};

// Intermediates of the fusion step kept for the backward pass.
struct FusionCache {
  std::vector<std::string> modalities;
  std::vector<Eigen::MatrixXd> projected;  // h_m, num_items x d
  Eigen::MatrixXd attention;               // num_items x M, rows sum to 1
  Eigen::MatrixXd shared;                  // num_items x d
  Eigen::MatrixXd mean_specific;           // num_items x d
  Eigen::MatrixXd gate;                    // num_items x d, in (0,1)
};

struct ForwardPass {
  PropagatedState state;
  FusionCache cache;
};

// Upstream derivatives of a scalar objective w.r.t. the state blocks.
// user_final/item_final contributions are folded into both their beh and
// mul summands.
struct StateGrad {
  Eigen::MatrixXd user_beh, item_beh, user_mul, item_mul;

  static StateGrad zeros(const PropagatedState& like);
  void add_final(std::int32_t user, std::int32_t item, double d_score,
                 const PropagatedState& s);
  StateGrad& operator+=(const StateGrad& o);
  StateGrad& operator*=(double s);
};

// Binds the frozen inputs (features, adjacency, neighbor lists) that a
// forward/backward pass needs. `edges` is the interaction set the graph
// convolution and user-side fusion see (D_T for training, D_r once
// unlearning starts).
class Recommender {
 public:
  Recommender(const InteractionGraph& graph, const EdgeList& edges, int layers);

  ForwardPass forward(const ModelParams& params) const;
  ModelParams backward(const ModelParams& params, const ForwardPass& pass,
                       const StateGrad& grad) const;

  const NormAdj& adjacency() const { return adj_; }
  std::int32_t num_users() const { return adj_.num_users; }
  std::int32_t num_items() const { return adj_.num_items; }
  int layers() const { return layers_; }

 private:
  const InteractionGraph* graph_;
  NormAdj adj_;
  // Row-normalized user->item incidence: user_mul = neighbor_mean_ * item_mul.
  Eigen::SparseMatrix<double, Eigen::RowMajor> neighbor_mean_;
  int layers_;
};

// The fusion step alone, exposed for tests: computes item_mul/user_mul and
// finals from propagated behavior embeddings.
ForwardPass fuse_modalities(const ModelParams& params, const InteractionGraph& graph,
                            const Eigen::SparseMatrix<double, Eigen::RowMajor>& neighbor_mean,
                            Eigen::MatrixXd user_beh, Eigen::MatrixXd item_beh);

Eigen::SparseMatrix<double, Eigen::RowMajor> neighbor_mean_operator(std::int32_t num_users,
                                                                    std::int32_t num_items,
                                                                    const EdgeList& edges);

double score(const PropagatedState& state, std::int32_t user, std::int32_t item);

// Items not masked for `user`, by descending score, ties by ascending index.
// `masked_items` must be sorted ascending.
std::vector<std::int32_t> recommend_topk(const PropagatedState& state, std::int32_t user, int k,
                                         const std::vector<std::int32_t>& masked_items);
std::vector<std::int32_t> recommend_topk(const PropagatedState& state, std::int32_t user, int k,
                                         const EdgeList& mask);

// Checkpoint: "MMCK", u32 version, then per tensor u32 name length, name
// bytes, u32 rows, u32 cols, float64 row-major, all little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace mmrecun

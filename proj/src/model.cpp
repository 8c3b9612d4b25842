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
#include "mmrecun/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <utility>

#include "mmrecun/errors.hpp"
#include "mmrecun/rng.hpp"

namespace mmrecun {

void HyperParams::validate() const {
  if (dim <= 0) throw ConfigError("dim must be positive");
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("alpha must lie in [0, 1]");
  if (layers < 0) throw ConfigError("layers must be >= 0");
  if (!(lambda_l2 >= 0)) throw ConfigError("lambda_l2 must be >= 0");
  if (!(lambda_c >= 0)) throw ConfigError("lambda_c must be >= 0");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (neg_per_pos <= 0) throw ConfigError("neg_per_pos must be positive");
  for (int k : topk_list)
    if (k < 1) throw ConfigError("top-K values must be >= 1");
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.visit([](const std::string&, auto& t) { t.setZero(); });
  return z;
}

double ModelParams::squared_norm() const {
  double s = 0.0;
  visit([&](const std::string&, const auto& t) { s += t.squaredNorm(); });
  return s;
}

std::size_t ModelParams::size() const {
  std::size_t n = 0;
  visit([&](const std::string&, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  visit([&](const std::string&, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  std::vector<std::tuple<std::string, Eigen::Index, Eigen::Index>> a, b;
  visit([&](const std::string& n, const auto& t) { a.emplace_back(n, t.rows(), t.cols()); });
  other.visit([&](const std::string& n, const auto& t) { b.emplace_back(n, t.rows(), t.cols()); });
  return a == b;
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  if (!same_shape(other)) throw ShapeError("add_scaled: parameter shapes differ");
  std::vector<const double*> src;
  other.visit([&](const std::string&, const auto& t) { src.push_back(t.data()); });
  std::size_t k = 0;
  visit([&](const std::string&, auto& t) {
    const double* s = src[k++];
    for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] += scale * s[j];
  });
}

void ModelParams::scale(double s) {
  visit([&](const std::string&, auto& t) { t *= s; });
}

Eigen::VectorXd ModelParams::flatten() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  Eigen::Index off = 0;
  visit([&](const std::string&, const auto& t) {
    for (Eigen::Index j = 0; j < t.size(); ++j) v[off++] = t.data()[j];
  });
  return v;
}

void ModelParams::unflatten(const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != size()) throw ShapeError("unflatten: size mismatch");
  Eigen::Index off = 0;
  visit([&](const std::string&, auto& t) {
    for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = v[off++];
  });
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (!a.same_shape(b)) return false;
  Eigen::VectorXd fa = a.flatten(), fb = b.flatten();
  return std::memcmp(fa.data(), fb.data(), sizeof(double) * static_cast<std::size_t>(fa.size())) == 0;
}

ModelParams init_params(const InteractionGraph& graph, const HyperParams& hyper,
                        std::uint64_t seed) {
  const int d = hyper.dim;
  ModelParams p;
  p.user_emb.resize(graph.num_users, d);
  p.item_emb.resize(graph.num_items, d);
  for (const auto& [m, feats] : graph.modality_features) {
    p.proj[m].resize(d, feats.cols());
    p.attn[m].resize(d);
  }
  p.gate_weight.resize(d, d);
  p.gate_bias.resize(d);

  Rng rng = SeedStreams(seed).stream("init");
  p.visit([&](const std::string&, auto& t) {
    const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = dist(rng);
  });
  return p;
}

void propagate(const Eigen::MatrixXd& user_emb, const Eigen::MatrixXd& item_emb,
               const NormAdj& adj, int layers, Eigen::MatrixXd& user_beh,
               Eigen::MatrixXd& item_beh) {
  const Eigen::Index nu = user_emb.rows(), ni = item_emb.rows();
  if (nu != adj.num_users || ni != adj.num_items) {
    throw ShapeError("propagate: embedding rows do not match adjacency node count");
  }
  Eigen::MatrixXd layer(nu + ni, user_emb.cols());
  layer.topRows(nu) = user_emb;
  layer.bottomRows(ni) = item_emb;
  Eigen::MatrixXd acc = layer;
  for (int l = 0; l < layers; ++l) {
    layer = adj.matrix * layer;
    acc += layer;
  }
  acc /= static_cast<double>(layers + 1);
  user_beh = acc.topRows(nu);
  item_beh = acc.bottomRows(ni);
}

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

// Transposed propagation; the adjacency is symmetric so this applies the
// same operator as the forward pass.
void propagate_backward(const NormAdj& adj, int layers, const Eigen::MatrixXd& d_user_beh,
                        const Eigen::MatrixXd& d_item_beh, Eigen::MatrixXd& d_user_emb,
                        Eigen::MatrixXd& d_item_emb) {
  propagate(d_user_beh, d_item_beh, adj, layers, d_user_emb, d_item_emb);
}

}  // namespace

Eigen::SparseMatrix<double, Eigen::RowMajor> neighbor_mean_operator(std::int32_t num_users,
                                                                    std::int32_t num_items,
                                                                    const EdgeList& edges) {
  std::vector<int> degree(static_cast<std::size_t>(num_users), 0);
  for (const Edge& e : edges) ++degree[e.user];
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size());
  for (const Edge& e : edges) triplets.emplace_back(e.user, e.item, 1.0 / degree[e.user]);
  Eigen::SparseMatrix<double, Eigen::RowMajor> r(num_users, num_items);
  r.setFromTriplets(triplets.begin(), triplets.end());
  r.makeCompressed();
  return r;
}

ForwardPass fuse_modalities(const ModelParams& params, const InteractionGraph& graph,
                            const Eigen::SparseMatrix<double, Eigen::RowMajor>& neighbor_mean,
                            Eigen::MatrixXd user_beh, Eigen::MatrixXd item_beh) {
  const Eigen::Index ni = item_beh.rows();
  const Eigen::Index d = item_beh.cols();
  ForwardPass pass;
  FusionCache& c = pass.cache;
  for (const auto& [m, feats] : graph.modality_features) {
    auto pit = params.proj.find(m);
    auto ait = params.attn.find(m);
    if (pit == params.proj.end() || ait == params.attn.end()) {
      throw DimensionError("no projection for modality '" + m + "'");
    }
    if (pit->second.cols() != feats.cols() || pit->second.rows() != d || ait->second.size() != d) {
      throw DimensionError("modality '" + m + "': projection is " +
                           std::to_string(pit->second.rows()) + "x" +
                           std::to_string(pit->second.cols()) + ", features have " +
                           std::to_string(feats.cols()) + " columns");
    }
    if (feats.rows() != ni) throw DimensionError("modality '" + m + "' row count mismatch");
    c.modalities.push_back(m);
    c.projected.push_back(feats * pit->second.transpose());
  }
  const auto num_mod = static_cast<Eigen::Index>(c.modalities.size());

  c.attention = Eigen::MatrixXd::Zero(ni, num_mod);
  c.shared = Eigen::MatrixXd::Zero(ni, d);
  c.mean_specific = Eigen::MatrixXd::Zero(ni, d);
  if (num_mod > 0) {
    Eigen::MatrixXd logits(ni, num_mod);
    for (Eigen::Index m = 0; m < num_mod; ++m) {
      logits.col(m) = c.projected[m] * params.attn.at(c.modalities[m]).transpose();
    }
    for (Eigen::Index i = 0; i < ni; ++i) {
      const double mx = logits.row(i).maxCoeff();
      Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
      c.attention.row(i) = e / e.sum();
    }
    Eigen::MatrixXd mean_h = Eigen::MatrixXd::Zero(ni, d);
    for (Eigen::Index m = 0; m < num_mod; ++m) {
      c.shared += c.attention.col(m).asDiagonal() * c.projected[m];
      mean_h += c.projected[m];
    }
    mean_h /= static_cast<double>(num_mod);
    c.mean_specific = mean_h - c.shared;
  }
  Eigen::MatrixXd z = item_beh * params.gate_weight.transpose();
  z.rowwise() += params.gate_bias;
  c.gate = sigmoid(z);

  PropagatedState& s = pass.state;
  s.item_mul = c.shared + c.gate.cwiseProduct(c.mean_specific);
  s.user_mul = neighbor_mean * s.item_mul;
  s.user_beh = std::move(user_beh);
  s.item_beh = std::move(item_beh);
  s.user_final = s.user_beh + s.user_mul;
  s.item_final = s.item_beh + s.item_mul;
  return pass;
}

StateGrad StateGrad::zeros(const PropagatedState& like) {
  StateGrad g;
  g.user_beh = Eigen::MatrixXd::Zero(like.user_beh.rows(), like.user_beh.cols());
  g.item_beh = Eigen::MatrixXd::Zero(like.item_beh.rows(), like.item_beh.cols());
  g.user_mul = Eigen::MatrixXd::Zero(like.user_mul.rows(), like.user_mul.cols());
  g.item_mul = Eigen::MatrixXd::Zero(like.item_mul.rows(), like.item_mul.cols());
  return g;
}

void StateGrad::add_final(std::int32_t user, std::int32_t item, double d_score,
                          const PropagatedState& s) {
  // score = <user_final_u, item_final_i>
  user_beh.row(user) += d_score * s.item_final.row(item);
  user_mul.row(user) += d_score * s.item_final.row(item);
  item_beh.row(item) += d_score * s.user_final.row(user);
  item_mul.row(item) += d_score * s.user_final.row(user);
}

StateGrad& StateGrad::operator+=(const StateGrad& o) {
  user_beh += o.user_beh;
  item_beh += o.item_beh;
  user_mul += o.user_mul;
  item_mul += o.item_mul;
  return *this;
}

StateGrad& StateGrad::operator*=(double s) {
  user_beh *= s;
  item_beh *= s;
  user_mul *= s;
  item_mul *= s;
  return *this;
}

Recommender::Recommender(const InteractionGraph& graph, const EdgeList& edges, int layers)
    : graph_(&graph),
      adj_(build_normalized_adjacency(graph.num_users, graph.num_items, edges)),
      neighbor_mean_(neighbor_mean_operator(graph.num_users, graph.num_items, edges)),
      layers_(layers) {}

ForwardPass Recommender::forward(const ModelParams& params) const {
  Eigen::MatrixXd user_beh, item_beh;
  propagate(params.user_emb, params.item_emb, adj_, layers_, user_beh, item_beh);
  return fuse_modalities(params, *graph_, neighbor_mean_, std::move(user_beh),
                         std::move(item_beh));
}

ModelParams Recommender::backward(const ModelParams& params, const ForwardPass& pass,
                                  const StateGrad& grad) const {
  const FusionCache& c = pass.cache;
  const PropagatedState& s = pass.state;
  ModelParams out = params.zeros_like();

  Eigen::MatrixXd d_item_mul = grad.item_mul;
  d_item_mul += neighbor_mean_.transpose() * grad.user_mul;

  // item_mul = shared + gate * (mean_h - shared)
  const Eigen::MatrixXd d_gate = d_item_mul.cwiseProduct(c.mean_specific);
  const Eigen::MatrixXd d_mean_spec = d_item_mul.cwiseProduct(c.gate);
  const Eigen::MatrixXd d_shared = d_item_mul - d_mean_spec;

  const auto num_mod = static_cast<Eigen::Index>(c.modalities.size());
  if (num_mod > 0) {
    std::vector<Eigen::MatrixXd> d_h(num_mod);
    Eigen::MatrixXd d_att(c.attention.rows(), num_mod);
    for (Eigen::Index m = 0; m < num_mod; ++m) {
      d_h[m] = d_mean_spec / static_cast<double>(num_mod) +
               c.attention.col(m).asDiagonal() * d_shared;
      d_att.col(m) = d_shared.cwiseProduct(c.projected[m]).rowwise().sum();
    }
    // softmax backward, row by row
    const Eigen::VectorXd inner = c.attention.cwiseProduct(d_att).rowwise().sum();
    Eigen::MatrixXd d_logits = c.attention.cwiseProduct(d_att.colwise() - inner);
    for (Eigen::Index m = 0; m < num_mod; ++m) {
      const std::string& name = c.modalities[m];
      const Eigen::RowVectorXd& attn = params.attn.at(name);
      out.attn.at(name) = d_logits.col(m).transpose() * c.projected[m];
      d_h[m] += d_logits.col(m) * attn;
      out.proj.at(name) = d_h[m].transpose() * graph_->modality_features.at(name);
    }
  }

  const Eigen::MatrixXd d_z =
      d_gate.cwiseProduct(c.gate).cwiseProduct((1.0 - c.gate.array()).matrix());
  out.gate_weight = d_z.transpose() * s.item_beh;
  out.gate_bias = d_z.colwise().sum();
  const Eigen::MatrixXd d_item_beh = grad.item_beh + d_z * params.gate_weight;

  propagate_backward(adj_, layers_, grad.user_beh, d_item_beh, out.user_emb, out.item_emb);
  return out;
}

double score(const PropagatedState& state, std::int32_t user, std::int32_t item) {
  return state.user_final.row(user).dot(state.item_final.row(item));
}

std::vector<std::int32_t> recommend_topk(const PropagatedState& state, std::int32_t user, int k,
                                         const std::vector<std::int32_t>& masked_items) {
  if (k < 1) throw DomainError("recommend_topk: K must be >= 1");
  const Eigen::VectorXd scores = state.item_final * state.user_final.row(user).transpose();
  std::vector<std::int32_t> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  auto mit = masked_items.begin();
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(scores.size()); ++i) {
    while (mit != masked_items.end() && *mit < i) ++mit;
    if (mit != masked_items.end() && *mit == i) continue;
    candidates.push_back(i);
  }
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
  auto better = [&](std::int32_t a, std::int32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  candidates.resize(n);
  return candidates;
}

std::vector<std::int32_t> recommend_topk(const PropagatedState& state, std::int32_t user, int k,
                                         const EdgeList& mask) {
  auto lo = std::lower_bound(mask.begin(), mask.end(), Edge{user, 0});
  std::vector<std::int32_t> masked;
  for (; lo != mask.end() && lo->user == user; ++lo) masked.push_back(lo->item);
  return recommend_topk(state, user, k, masked);
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write checkpoint " + path.string());
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write("MMCK", 4);
  put_u32(kCheckpointVersion);
  params.visit([&](const std::string& name, const auto& t) {
    put_u32(static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(static_cast<std::uint32_t>(t.rows()));
    put_u32(static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index col = 0; col < t.cols(); ++col) {
        const double v = t(r, col);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
  });
  if (!out) throw FileError("write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open checkpoint " + path.string());
  auto get_u32 = [&]() {
    std::uint32_t v;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) {
      throw ParseError("truncated checkpoint " + path.string());
    }
    return v;
  };
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MMCK", 4) != 0) {
    throw ParseError("bad checkpoint magic in " + path.string());
  }
  if (const auto version = get_u32(); version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelParams p;
  bool have_user = false, have_item = false, have_gate_w = false, have_gate_b = false;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t len = get_u32();
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ParseError("truncated checkpoint " + path.string());
    const std::uint32_t rows = get_u32();
    const std::uint32_t cols = get_u32();
    Eigen::MatrixXd t(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) {
        double v;
        if (!in.read(reinterpret_cast<char*>(&v), 8)) {
          throw ParseError("truncated checkpoint " + path.string());
        }
        t(r, c) = v;
      }
    auto as_row = [&]() -> Eigen::RowVectorXd {
      if (rows != 1) throw ParseError("tensor '" + name + "' must have one row");
      return t.row(0);
    };
    if (name == "user_emb") {
      p.user_emb = std::move(t), have_user = true;
    } else if (name == "item_emb") {
      p.item_emb = std::move(t), have_item = true;
    } else if (name == "gate_weight") {
      p.gate_weight = std::move(t), have_gate_w = true;
    } else if (name == "gate_bias") {
      p.gate_bias = as_row(), have_gate_b = true;
    } else if (name.rfind("proj/", 0) == 0) {
      p.proj[name.substr(5)] = std::move(t);
    } else if (name.rfind("attn/", 0) == 0) {
      p.attn[name.substr(5)] = as_row();
    } else {
      throw ParseError("unknown tensor '" + name + "' in checkpoint");
    }
  }
  if (!have_user || !have_item || !have_gate_w || !have_gate_b) {
    throw ParseError("checkpoint " + path.string() + " is missing tensors");
  }
  return p;
}

}  // namespace mmrecun

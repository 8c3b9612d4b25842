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
// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion with the
// measured quantities and exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mmrecun/metrics.hpp"
#include "mmrecun/synth.hpp"
#include "mmrecun/unlearn.hpp"
#include "oracles.hpp"

using namespace mmrecun;
using namespace mmrecun::testing;

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kSeeds = 5;
constexpr int kK = 20;

int failures = 0;
std::map<int, std::string> lines;

void verdict(int id, bool pass, const std::string& title, const std::string& detail) {
  lines[id] = "criterion " + std::to_string(id) + (pass ? " PASS  " : " FAIL  ") + title + ": " +
              detail;
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string list(const std::vector<double>& v, const char* f = "%.4f") {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s + "]";
}

// ---------------------------------------------------------------- 1, 2, 3, 8

void criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  int checks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_loss_instance(1000 + seed);
    const auto& h = inst.hyper;
    const Recommender net(inst.graph, inst.graph.edges, h.layers);
    const auto nb = nodes_of(inst.batch), nf = nodes_of(inst.forget);
    const auto pass = net.forward(inst.params);
    auto check = [&](const ModelParams& analytic,
                     const std::function<double(const ModelParams&)>& f) {
      worst = std::max(worst, relative_error(analytic.flatten(), numeric_gradient(inst.params, f)));
      ++checks;
    };
    check(bpr_loss(net, inst.params, pass, inst.batch).grads, [&](const ModelParams& p) {
      return bpr_loss(net, p, net.forward(p), inst.batch).combined;
    });
    check(reverse_bpr_loss(net, inst.params, pass, inst.forget).grads, [&](const ModelParams& p) {
      return reverse_bpr_loss(net, p, net.forward(p), inst.forget).combined;
    });
    check(contrastive_loss(net, inst.params, pass, nb, h.tau).grads, [&](const ModelParams& p) {
      return contrastive_loss(net, p, net.forward(p), nb, h.tau).combined;
    });
    ModelParams l2g;
    l2_penalty(inst.params, &l2g);
    check(l2g, [&](const ModelParams& p) { return l2_penalty(p, nullptr); });
    check(preserve_loss(net, inst.params, pass, inst.batch, nb, h).grads,
          [&](const ModelParams& p) {
            return preserve_loss(net, p, net.forward(p), inst.batch, nb, h).combined;
          });
    check(impair_loss(net, inst.params, pass, inst.forget, nf, h).grads,
          [&](const ModelParams& p) {
            return impair_loss(net, p, net.forward(p), inst.forget, nf, h).combined;
          });
    check(combined_loss(preserve_loss(net, inst.params, pass, inst.batch, nb, h),
                        impair_loss(net, inst.params, pass, inst.forget, nf, h), h.alpha)
              .grads,
          [&](const ModelParams& p) {
            const auto q = net.forward(p);
            return combined_loss(preserve_loss(net, p, q, inst.batch, nb, h),
                                 impair_loss(net, p, q, inst.forget, nf, h), h.alpha)
                .combined;
          });
  }
  const double t = seconds_since(start);
  verdict(1, worst <= 1e-4 && t < 60.0, "gradient correctness",
          "max relative error " + fmt("%.3g", worst) + " over " + std::to_string(checks) +
              " checks (7 losses x 20 instances), " + fmt("%.1f", t) + " s");
}

void criterion_identities() {
  const auto start = Clock::now();
  double worst = 0.0;
  bool exact_negation = true;
  auto rel = [](double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_loss_instance(2000 + seed);
    const auto& h = inst.hyper;
    const Recommender net(inst.graph, inst.graph.edges, h.layers);
    const auto pass = net.forward(inst.params);
    const auto nb = nodes_of(inst.batch), nf = nodes_of(inst.forget);
    for (const auto* batch : {&inst.batch, &inst.forget}) {
      const auto b = bpr_term(pass.state, *batch), r = reverse_bpr_term(pass.state, *batch);
      exact_negation = exact_negation && r.value == -b.value &&
                       r.grad.user_beh == -b.grad.user_beh && r.grad.item_beh == -b.grad.item_beh &&
                       r.grad.user_mul == -b.grad.user_mul && r.grad.item_mul == -b.grad.item_mul;
    }
    const auto p = preserve_loss(net, inst.params, pass, inst.batch, nb, h);
    const auto r = impair_loss(net, inst.params, pass, inst.forget, nf, h);
    const auto c = combined_loss(p, r, h.alpha);
    const auto fused = unlearning_loss(net, inst.params, pass, inst.batch, nb, inst.forget, nf, h);
    worst = std::max({worst, rel(p.preserve, p.bpr + h.lambda_c * p.contrastive + h.lambda_l2 * p.l2),
                      rel(r.impair, r.rpr - (h.lambda_c * r.contrastive_forget + h.lambda_l2 * r.l2)),
                      rel(c.combined, h.alpha * p.preserve + (1.0 - h.alpha) * r.impair),
                      rel(fused.combined, c.combined)});
    auto mix = p.grads;
    mix.scale(h.alpha);
    mix.add_scaled(r.grads, 1.0 - h.alpha);
    worst = std::max({worst, relative_error(mix.flatten(), c.grads.flatten()),
                      relative_error(fused.grads.flatten(), c.grads.flatten())});
  }
  const double t = seconds_since(start);
  verdict(2, exact_negation && worst <= 1e-12, "algebraic identities",
          std::string("rpr == -bpr bitwise: ") + (exact_negation ? "yes" : "no") +
              ", max composition relative error " + fmt("%.3g", worst) + ", " + fmt("%.2f", t) +
              " s");
}

void criterion_metric_oracle() {
  const auto start = Clock::now();
  Rng rng(3003);
  std::uniform_int_distribution<int> size(1, 10), kdist(1, 5), dim(1, 3), cell(0, 3);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const int users = size(rng), items = size(rng), k = kdist(rng);
    const auto s = random_tied_state(rng, users, items, dim(rng));
    EdgeList eval, mask;
    for (int u = 0; u < users; ++u)
      for (int i = 0; i < items; ++i) {
        const int c = cell(rng);
        if (c == 0) eval.push_back({u, i});
        if (c == 1) mask.push_back({u, i});
      }
    if (eval.empty()) eval.push_back({0, 0});
    mask = edge_difference(mask, eval);
    if (!(user_metrics(s, eval, k, mask) == brute_user_metrics(s, eval, k, mask))) ++mismatches;
    if (!(item_metrics(s, eval, k, mask) == brute_item_metrics(s, eval, k, mask))) ++mismatches;
  }
  const double t = seconds_since(start);
  verdict(3, mismatches == 0 && t < 60.0, "metric oracle equivalence",
          std::to_string(mismatches) + " mismatches in 100 cases x 2 views (exact equality), " +
              fmt("%.2f", t) + " s");
}

void criterion_partition_laws() {
  const auto start = Clock::now();
  Rng rng(8008);
  const ForgetKind kinds[] = {ForgetKind::kInteraction, ForgetKind::kUserPreference,
                              ForgetKind::kBiasedItem, ForgetKind::kAccount, ForgetKind::kLicense};
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto g = random_graph(rng, 5 + t % 13, 4 + t % 9, 0.3);
    const auto split = split_dataset(g, static_cast<std::uint64_t>(t));
    const auto spec = random_forget_spec(rng, split, kinds[t % 5]);
    if (!partition_law_violation(split, spec, mark_forget(split, spec)).empty()) ++violations;
  }
  const double t = seconds_since(start);
  verdict(8, violations == 0, "partition law suite",
          std::to_string(violations) + " violations in 1000 specs across 5 kinds, " +
              fmt("%.2f", t) + " s");
}

// ------------------------------------------------------------ 4, 5, 6, 7, 9

struct World {
  InteractionGraph graph;
  DatasetSplit split;
  Partition partition;
};

// Default synthetic dataset for `seed` with 5% of users (or items) forgotten.
World make_world(std::uint64_t seed, ForgetKind kind) {
  World w;
  SynthOptions so;
  so.seed = seed;
  w.graph = generate_synthetic(so);
  w.split = split_dataset(w.graph, seed);
  ForgetSpec spec;
  spec.kind = kind;
  const int n = kind == ForgetKind::kAccount ? w.graph.num_users : w.graph.num_items;
  std::vector<std::int32_t> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i] = i;
  Rng rng = SeedStreams(seed).stream("forget_targets");
  std::shuffle(nodes.begin(), nodes.end(), rng);
  spec.nodes.assign(nodes.begin(), nodes.begin() + n / 20);
  std::sort(spec.nodes.begin(), spec.nodes.end());
  w.partition = mark_forget(w.split, spec);
  return w;
}

TrainConfig config_for(std::uint64_t seed, Mode mode, const HyperParams& hyper) {
  TrainConfig tc;
  tc.seed = seed;
  tc.mode = mode;
  tc.hyper = hyper;
  return tc;
}

// Recall@K on the named set; the model is served on `edges`.
double recall(const World& w, const EdgeList& edges, const ModelParams& p, const char* set,
              View view, int k) {
  const Recommender net(w.graph, edges, 2);
  const auto report = evaluate(net.forward(p).state, w.split, &w.partition, {k}, view);
  return report.sets.at(set).at(k).recall;
}

void criteria_user_unlearning() {
  const auto start = Clock::now();
  const HyperParams hyper;
  std::vector<double> gap, test_mm, test_gold, test_am, beta_first, beta_last, beta_delta;
  std::vector<double> forget_mm, forget_gold;
  std::vector<double> alphas{0.01, 0.1, 0.3, 0.9};
  std::vector<std::vector<double>> sweep_valid(alphas.size()), sweep_forget(alphas.size());
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const World w = make_world(seed, ForgetKind::kAccount);
    const auto original = train(w.graph, w.split, config_for(seed, Mode::kTrain, hyper)).params;
    const auto gold =
        retrain_gold(w.graph, w.split, w.partition, config_for(seed, Mode::kGold, hyper)).params;
    const auto mm = unlearn_mmrecun(w.graph, w.split, w.partition, original,
                                    config_for(seed, Mode::kMmrecun, hyper), &gold);
    const auto am = unlearn_amun(w.graph, w.split, w.partition, original,
                                 config_for(seed, Mode::kAmun, hyper));
    const EdgeList& r = w.partition.retain;
    forget_mm.push_back(recall(w, r, mm.params, "forget", View::kUserCentric, kK));
    forget_gold.push_back(recall(w, r, gold, "forget", View::kUserCentric, kK));
    gap.push_back(std::abs(forget_mm.back() - forget_gold.back()));
    test_mm.push_back(recall(w, r, mm.params, "test", View::kUserCentric, kK));
    test_gold.push_back(recall(w, r, gold, "test", View::kUserCentric, kK));
    test_am.push_back(recall(w, r, am.params, "test", View::kUserCentric, kK));
    beta_first.push_back(mm.divergence_curve.front().second);
    beta_last.push_back(mm.divergence_curve.back().second);
    beta_delta.push_back(beta_last.back() - beta_first.back());

    for (std::size_t a = 0; a < alphas.size(); ++a) {
      HyperParams ha = hyper;
      ha.alpha = alphas[a];
      const auto run = unlearn_mmrecun(w.graph, w.split, w.partition, original,
                                       config_for(seed, Mode::kMmrecun, ha));
      sweep_valid[a].push_back(recall(w, r, run.params, "valid", View::kUserCentric, kK));
      sweep_forget[a].push_back(recall(w, r, run.params, "forget", View::kUserCentric, kK));
    }
  }
  const double t = seconds_since(start);

  const double med_gap = median(gap), med_mm = median(test_mm), med_gold = median(test_gold),
               med_am = median(test_am);
  const bool specificity = med_gap <= 0.02;
  const bool fidelity = med_mm >= 0.9 * med_gold;
  const bool amun_below = med_am < med_mm;
  verdict(4, specificity && fidelity && amun_below && t < 900.0, "specificity + fidelity",
          "median |forget R@20 mmrecun - gold| = " + fmt("%.4f", med_gap) + " (<= 0.02: " +
              (specificity ? "yes" : "no") + "; mmrecun " + list(forget_mm) + " gold " +
              list(forget_gold) + "); median test R@20 mmrecun " + fmt("%.4f", med_mm) +
              " vs 0.9 x gold " + fmt("%.4f", 0.9 * med_gold) + " (" + (fidelity ? "ok" : "low") +
              "); amun " + fmt("%.4f", med_am) + " < mmrecun: " + (amun_below ? "yes" : "no") +
              "; " + fmt("%.0f", t) + " s incl. alpha sweep");

  verdict(5, median(beta_delta) < 0.0, "divergence decay",
          "beta epoch 1 " + list(beta_first, "%.4g") + ", final " + list(beta_last, "%.4g") +
              ", median change " + fmt("%.4g", median(beta_delta)));

  std::vector<double> mv, mf;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    mv.push_back(median(sweep_valid[a]));
    mf.push_back(median(sweep_forget[a]));
  }
  const double lo = *std::min_element(mf.begin(), mf.end());
  const double hi = *std::max_element(mf.begin(), mf.end());
  const bool valid_order = mv[2] >= mv[3];
  const bool flat = hi <= 2.0 * lo;
  verdict(7, valid_order && flat, "alpha-sweep shape",
          "alpha {0.01,0.1,0.3,0.9}: median valid R@20 " + list(mv) + " (0.3 >= 0.9: " +
              (valid_order ? "yes" : "no") + "), median forget R@20 " + list(mf) +
              " (max <= 2 x min: " + (flat ? "yes" : "no") + ")");
}

void criterion_efficiency() {
  // Matched configuration: identical hyper-parameters for gold and
  // mmrecun, with patience 50 so that gold trains at least 50 epochs.
  HyperParams hyper;
  hyper.patience = 50;
  int faster = 0, long_gold = 0;
  std::vector<double> tg, tm, eg, em;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const World w = make_world(seed, ForgetKind::kAccount);
    const auto original = train(w.graph, w.split, config_for(seed, Mode::kTrain, hyper)).params;
    // Runs are deterministic; the fastest of three repeats filters out
    // scheduler noise.
    RunResult gold, mm;
    double gold_time = 1e300, mm_time = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      gold = retrain_gold(w.graph, w.split, w.partition, config_for(seed, Mode::kGold, hyper));
      mm = unlearn_mmrecun(w.graph, w.split, w.partition, original,
                           config_for(seed, Mode::kMmrecun, hyper));
      gold_time = std::min(gold_time, gold.wall_time);
      mm_time = std::min(mm_time, mm.wall_time);
    }
    tg.push_back(gold_time);
    tm.push_back(mm_time);
    eg.push_back(gold.epochs_run);
    em.push_back(mm.epochs_run);
    if (gold.epochs_run >= 50) ++long_gold;
    if (gold.epochs_run >= 50 && mm_time < gold_time) ++faster;
  }
  verdict(6, long_gold == kSeeds && faster >= 4, "efficiency",
          "mmrecun faster than gold in " + std::to_string(faster) + "/5 seeds; min-of-3 wall s gold " +
              list(tg, "%.3f") + " mmrecun " + list(tm, "%.3f") + "; epochs gold " +
              list(eg, "%.0f") + " mmrecun " + list(em, "%.0f"));
}

void criterion_item_unlearning() {
  const HyperParams hyper;
  std::vector<double> orig, gold_r, mm_r, gap, excess;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const World w = make_world(seed, ForgetKind::kLicense);
    const int k = w.graph.num_items / 5;
    const auto original = train(w.graph, w.split, config_for(seed, Mode::kTrain, hyper)).params;
    const auto gold =
        retrain_gold(w.graph, w.split, w.partition, config_for(seed, Mode::kGold, hyper)).params;
    const auto mm = unlearn_mmrecun(w.graph, w.split, w.partition, original,
                                    config_for(seed, Mode::kMmrecun, hyper));
    // The original model is served as trained, on all train edges.
    orig.push_back(recall(w, w.split.train, original, "forget", View::kItemCentric, k));
    gold_r.push_back(recall(w, w.partition.retain, gold, "forget", View::kItemCentric, k));
    mm_r.push_back(recall(w, w.partition.retain, mm.params, "forget", View::kItemCentric, k));
    gap.push_back(std::abs(mm_r.back() - gold_r.back()));
    excess.push_back(mm_r.back() - orig.back());
  }
  const bool below = median(excess) <= 0.0;
  const bool close = median(gap) <= 0.1;
  verdict(9, below && close, "item unlearning",
          "item-centric forget R@20: original " + list(orig) + " gold " + list(gold_r) +
              " mmrecun " + list(mm_r) + "; median (mmrecun - original) " +
              fmt("%.4f", median(excess)) + " <= 0: " + (below ? "yes" : "no") +
              "; median |mmrecun - gold| " + fmt("%.4f", median(gap)) + " <= 0.1: " +
              (close ? "yes" : "no"));
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_identities();
  criterion_metric_oracle();
  criteria_user_unlearning();
  criterion_efficiency();
  criterion_partition_laws();
  criterion_item_unlearning();
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

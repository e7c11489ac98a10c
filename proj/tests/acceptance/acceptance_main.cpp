// Copyright 2026 The cmtned Authors.
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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Values are checked against the independent oracles in
// tests/oracles; the end-to-end criterion drives the public C API.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmtned/cmtned.h"
#include "core/candgen.hpp"
#include "core/clustering.hpp"
#include "core/embeddings.hpp"
#include "core/eval.hpp"
#include "core/ranker.hpp"
#include "core/typing.hpp"
#include "oracles/candgen_oracle.hpp"
#include "oracles/eval_fixture.hpp"
#include "oracles/features_oracle.hpp"
#include "oracles/oracles.hpp"
#include "unit/feature_dump.hpp"

namespace cmt {
namespace {

// Collects failed checks of one criterion.
class Verdict {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ = failed_ || !ok;
  }
  void Note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool ok() const { return !failed_; }
  std::string Summary() const {
    std::string s = notes_;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + std::string("failed: ") + f;
    return s;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- 1: string metrics ------------------------------------------------------

void StringMetrics(Verdict* v) {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    auto a = oracle::RandomString(rng, 12, "abcde");
    auto b = oracle::RandomString(rng, 12, "abcde");
    mismatches += Levenshtein(std::string_view(a), std::string_view(b)) != oracle::LevenshteinRecursive(a, b);
  }
  v->Expect(mismatches == 0, std::to_string(mismatches) + " levenshtein mismatches");
  double worst_self = 0, worst_sym = 0;
  for (int i = 0; i < 1000; ++i) {
    auto a = oracle::RandomString(rng, 12, "abcdefgh");
    auto b = oracle::RandomString(rng, 12, "abcdefgh");
    worst_self = std::max(worst_self, std::fabs(JaroWinklerDistance(a, a)));
    worst_sym = std::max(worst_sym, std::fabs(JaroWinklerDistance(a, b) - JaroWinklerDistance(b, a)));
  }
  v->Expect(worst_self == 0.0, "jaro-winkler d(x,x) = " + Fmt("%g", worst_self));
  v->Expect(worst_sym <= 1e-12, "jaro-winkler asymmetry " + Fmt("%g", worst_sym));
  double t = Seconds(start);
  v->Expect(t < 5.0, "runtime " + Fmt("%.2f", t) + " s");
  v->Note("1000 pairs exact, " + Fmt("%.2f", t) + " s");
}

// ---- 2: candidate generation ------------------------------------------------

void CandidateGeneration(Verdict* v) {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2);
  auto store = oracle::RandomStore(rng, 1000, 200);
  TrigramIndex index(store);
  CandGenParams p;
  int diffs = 0;
  for (int q = 0; q < 200; ++q) {
    auto query = oracle::PerturbedQuery(rng, store);
    auto got = GetCandidatesForMention(index, query, p);
    auto want = oracle::BruteForceCandidates(store, query, p);
    std::set<std::string> g, w;
    for (const auto& c : got) g.insert(c.entity_id);
    for (const auto& [e, info] : want) w.insert(e);
    diffs += g != w;
  }
  v->Expect(diffs == 0, std::to_string(diffs) + " of 200 queries differ from the brute-force scan");

  int lowered = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto s = oracle::RandomStore(rng, 150, 40);
    TrigramIndex idx(s);
    Cooccurrence coocc;
    for (int i = 0; i < 80; ++i) {
      coocc.Add("E" + std::to_string(rng() % 40), "E" + std::to_string(rng() % 40), 1 + rng() % 5);
    }
    std::vector<std::string> surfaces;
    std::vector<std::optional<std::string>> golds;
    CandidateSets stage1;
    for (int m = 0; m < 8; ++m) {
      const auto& rec = s.records()[rng() % s.records().size()];
      auto words = SplitWords(rec.surface);
      std::string q = (rng() % 2 && words.size() > 1) ? words.back() : rec.surface;
      surfaces.push_back(q);
      golds.push_back(rec.entity_id);
      stage1.push_back(GetCandidatesForMention(idx, q, p));
    }
    auto expanded = ExpandDocumentCandidates(stage1, surfaces, coocc, s, 20);
    lowered += GoldRecall(expanded, golds, 1 << 20) < GoldRecall(stage1, golds, 1 << 20);
  }
  v->Expect(lowered == 0, "expansion lowered gold recall on " + std::to_string(lowered) + " fixtures");
  double t = Seconds(start);
  v->Expect(t < 30.0, "runtime " + Fmt("%.2f", t) + " s");
  v->Note("200 queries exact, 50 expansion fixtures, " + Fmt("%.2f", t) + " s");
}

// ---- 3: k-means ---------------------------------------------------------------

void KMeansCriterion(Verdict* v) {
  const double centers[3][2] = {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
  double worst_ari = 1.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::normal_distribution<double> nd(0.0, 0.05);
    std::vector<std::vector<double>> pts;
    std::vector<int> truth;
    for (int i = 0; i < 600; ++i) {
      pts.push_back({centers[i % 3][0] + nd(rng), centers[i % 3][1] + nd(rng)});
      truth.push_back(i % 3);
    }
    KMeansOptions o;
    o.k = 3;
    o.seed = seed;
    auto r = KMeans(pts, o);
    worst_ari = std::min(worst_ari, oracle::AdjustedRand(r.labels, truth));
    bool monotone = true;
    for (size_t i = 1; i < r.log.size(); ++i) monotone &= r.log[i].inertia <= r.log[i - 1].inertia;
    v->Expect(monotone, "inertia increased (seed " + std::to_string(seed) + ")");
    // The log stops at the first iteration moving at most 1%, or at 50.
    bool stop_ok = !r.log.empty() && r.log.size() <= 50 &&
                   (r.log.back().changed_fraction <= 0.01 || r.log.size() == 50);
    for (size_t i = 0; i + 1 < r.log.size(); ++i) stop_ok &= r.log[i].changed_fraction > 0.01;
    v->Expect(stop_ok, "stopping rule violated (seed " + std::to_string(seed) + ")");
  }
  v->Expect(worst_ari >= 0.99, "ARI " + Fmt("%.4f", worst_ari));
  v->Note("min ARI " + Fmt("%.4f", worst_ari) + " over 5 seeds");
}

// ---- 4: Brown clustering ----------------------------------------------------

void BrownCriterion(Verdict* v) {
  std::vector<std::vector<std::string>> streams;
  for (int i = 0; i < 5; ++i) {
    streams.push_back({"x", "A", "x"});
    streams.push_back({"x", "B", "x"});
  }
  const std::vector<std::string> vocab = {"A", "B", "x"};
  double best = -1;
  std::vector<int> best_p;
  for (const auto& p : oracle::PartitionsIntoK(3, 2)) {
    std::map<std::string, int> m;
    for (size_t i = 0; i < vocab.size(); ++i) m[vocab[i]] = p[i];
    double ami = oracle::AverageMutualInformation(streams, m);
    if (ami > best + 1e-12) {
      best = ami;
      best_p = p;
    }
  }
  auto c = BrownCluster(streams, 2, nullptr);
  std::vector<int> got;
  for (const auto& t : vocab) got.push_back(c.Lookup(t).value_or(-1));
  v->Expect(oracle::AdjustedRand(got, best_p) == 1.0, "partition differs from the exhaustive optimum");
  v->Note("exhaustive AMI optimum {A,B}{x} reproduced");
}

// ---- 5: AGCCS and the typing-confusion penalty ------------------------------

void AgccsCriterion(Verdict* v) {
  std::mt19937_64 rng(5);
  int agccs_bad = 0, penalty_bad = 0, order_bad = 0, compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Clustering rc;
    rc.k = 4;
    std::map<std::string, int> cmap;
    for (int e = 0; e < 15; ++e) {
      if (rng() % 5 == 0) continue;
      int cl = static_cast<int>(rng() % 4);
      rc.assignment["E" + std::to_string(e)] = cl;
      cmap["E" + std::to_string(e)] = cl;
    }
    std::vector<GoldCandidates> mentions;
    std::vector<std::pair<std::vector<std::string>, std::string>> plain;
    const int n = 1 + static_cast<int>(rng() % 10);
    for (int m = 0; m < n; ++m) {
      GoldCandidates g;
      const int nc = 1 + static_cast<int>(rng() % 10);
      for (int x = 0; x < nc; ++x) g.candidates.push_back("E" + std::to_string(rng() % 15));
      g.gold = g.candidates[rng() % nc];
      mentions.push_back(g);
      plain.emplace_back(g.candidates, g.gold);
    }
    auto want = oracle::AgccsBrute(plain, cmap);
    if (want) {
      ++compared;
      agccs_bad += Agccs(rc, mentions, nullptr) != *want;
    }

    // Penalty fixture: distinct candidates, some golds absent.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<GoldCandidates> pm;
    std::vector<int> gold_index;
    for (int m = 0; m < n; ++m) {
      GoldCandidates g;
      const int nc = 1 + static_cast<int>(rng() % 10);
      for (int x = 0; x < nc; ++x) g.candidates.push_back("C" + std::to_string(m) + "_" + std::to_string(x));
      const int gi = rng() % 4 == 0 ? -1 : static_cast<int>(rng() % nc);
      g.gold = gi >= 0 ? g.candidates[gi] : "absent";
      gold_index.push_back(gi);
      pm.push_back(g);
    }
    std::vector<VariantProbs> variants;
    for (Flavor f : {Flavor::kWord, Flavor::kSurface, Flavor::kSynset, Flavor::kBrown}) {
      for (int k = 0; k < 2; ++k) {
        std::vector<std::vector<double>> p;
        VariantProbs vp;
        vp.name = std::string(FlavorName(f)) + std::to_string(k);
        vp.flavor = f;
        for (const auto& g : pm) {
          std::vector<double> row;
          for (size_t x = 0; x < g.candidates.size(); ++x) row.push_back(u(rng));
          p.push_back(row);
          vp.probs.emplace_back(row.begin(), row.end());
        }
        penalty_bad += ConfusionPenalty(vp, pm) != oracle::ConfusionPenaltyBrute(p, gold_index);
        variants.push_back(vp);
      }
    }
    auto combos = SelectCombinations(variants, pm, 16);
    for (size_t i = 1; i < combos.size(); ++i) order_bad += combos[i - 1].penalty > combos[i].penalty;
  }
  v->Expect(agccs_bad == 0, std::to_string(agccs_bad) + " AGCCS mismatches");
  v->Expect(penalty_bad == 0, std::to_string(penalty_bad) + " penalty mismatches");
  v->Expect(order_bad == 0, std::to_string(order_bad) + " combination order violations");
  v->Note(std::to_string(compared) + " AGCCS + 800 penalty fixtures exact");
}

// ---- 6: gradients ----------------------------------------------------------

double RelErr(double numeric, double analytic) {
  return std::fabs(numeric - analytic) / std::max(1.0, std::fabs(numeric));
}

double SgnsGradError() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd(0.0, 0.5);
  const int dim = 10;
  auto vec = [&]() {
    std::vector<double> x(dim);
    for (double& e : x) e = nd(rng);
    return x;
  };
  std::vector<double> w = vec(), c = vec();
  std::vector<std::vector<double>> negs = {vec(), vec(), vec(), vec(), vec()};
  auto loss = [&]() {
    std::vector<std::span<const double>> ns(negs.begin(), negs.end());
    return SgnsLoss(w, c, ns, nullptr, nullptr, nullptr);
  };
  std::vector<double> gw, gc;
  std::vector<std::vector<double>> gn;
  {
    std::vector<std::span<const double>> ns(negs.begin(), negs.end());
    SgnsLoss(w, c, ns, &gw, &gc, &gn);
  }
  const double h = 1e-6;
  double worst = 0;
  auto probe = [&](std::vector<double>& x, const std::vector<double>& g) {
    for (int d = 0; d < dim; ++d) {
      const double keep = x[d];
      x[d] = keep + h;
      const double up = loss();
      x[d] = keep - h;
      const double down = loss();
      x[d] = keep;
      worst = std::max(worst, RelErr((up - down) / (2 * h), g[d]));
    }
  };
  probe(w, gw);
  probe(c, gc);
  for (size_t k = 0; k < negs.size(); ++k) probe(negs[k], gn[k]);
  return worst;
}

TypingInstance Inst(std::vector<std::string> left, std::vector<std::string> sf,
                    std::vector<std::string> right, int label) {
  TypingInstance t;
  t.context = {std::move(left), std::move(sf), std::move(right), ContextFormat::kSFC};
  t.label = label;
  return t;
}

double TypingGradError(EncoderKind enc) {
  // Asymmetric right contexts make the reversed right channel matter.
  std::vector<TypingInstance> data = {Inst({"a", "b"}, {"x"}, {"c", "a"}, 0),
                                      Inst({"b"}, {"y", "x"}, {"a", "c", "b"}, 1),
                                      Inst({}, {"y"}, {"d"}, 2), Inst({"c", "a", "d"}, {"x", "y"}, {}, 1),
                                      Inst({"d"}, {"x"}, {"b", "d", "a", "c"}, 2)};
  TypingConfig cfg;
  cfg.flavor = Flavor::kSurface;
  cfg.num_classes = 3;
  cfg.encoder = enc;
  cfg.hidden = 4;
  cfg.dropout = 0.0;
  cfg.emb_dim = 5;
  TypingTables tables;
  tables.vocab_source = &data;
  TypingModel model(cfg, tables, 7);
  std::vector<const TypingInstance*> batch;
  for (const auto& d : data) batch.push_back(&d);
  auto& p = model.params();
  p.ZeroGrad();
  model.Loss(batch, true, nullptr);
  const std::vector<double> analytic = p.grads();
  const double h = 1e-6;
  double worst = 0;
  for (size_t i = 0; i < p.values().size(); ++i) {
    const double keep = p.values()[i];
    p.values()[i] = keep + h;
    const double up = model.Loss(batch, false, nullptr);
    p.values()[i] = keep - h;
    const double down = model.Loss(batch, false, nullptr);
    p.values()[i] = keep;
    worst = std::max(worst, RelErr((up - down) / (2 * h), analytic[i]));
  }
  return worst;
}

std::vector<std::string> Names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("f" + std::to_string(i));
  return out;
}

RankerConfig RankerCfg(int inputs) {
  RankerConfig cfg;
  cfg.feature_names = Names(inputs);
  cfg.hidden = {500, 300};
  cfg.dropout = {0.1, 0.7};
  return cfg;
}

double RankerGradError() {
  RankerModel model(RankerCfg(6), 13);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> xs(8, std::vector<double>(6));
  for (auto& x : xs) {
    for (double& e : x) e = n01(rng);
  }
  std::vector<const std::vector<double>*> rows;
  for (const auto& x : xs) rows.push_back(&x);
  const std::vector<int> labels = {1, 0, 0, 1, 0, 1, 1, 0};
  auto& p = model.params();
  p.ZeroGrad();
  model.Loss(rows, labels, true, nullptr);
  const auto analytic = p.grads();
  // 200 sampled coordinates per tensor (the full network has ~155k).
  std::vector<size_t> coords;
  for (const auto& t : p.tensors()) {
    for (int k = 0; k < 200; ++k) coords.push_back(t.offset + rng() % t.size());
  }
  const double h = 1e-6;
  double worst = 0;
  for (size_t i : coords) {
    const double keep = p.values()[i];
    p.values()[i] = keep + h;
    const double up = model.Loss(rows, labels, false, nullptr);
    p.values()[i] = keep - h;
    const double down = model.Loss(rows, labels, false, nullptr);
    p.values()[i] = keep;
    worst = std::max(worst, RelErr((up - down) / (2 * h), analytic[i]));
  }
  return worst;
}

void GradientCriterion(Verdict* v) {
  const double sgns = SgnsGradError();
  const double mean = TypingGradError(EncoderKind::kMean);
  const double rec = TypingGradError(EncoderKind::kRecurrent);
  const double ranker = RankerGradError();
  v->Expect(sgns <= 1e-4, "SGNS " + Fmt("%.2e", sgns));
  v->Expect(mean <= 1e-4, "mean encoder " + Fmt("%.2e", mean));
  v->Expect(rec <= 1e-4, "recurrent encoder " + Fmt("%.2e", rec));
  v->Expect(ranker <= 1e-4, "ranker " + Fmt("%.2e", ranker));
  v->Note("max rel err: sgns " + Fmt("%.1e", sgns) + ", mean " + Fmt("%.1e", mean) + ", recurrent " +
          Fmt("%.1e", rec) + ", ranker " + Fmt("%.1e", ranker));
}

// ---- 7: typing model ---------------------------------------------------------

// Two clusters whose mentions use disjoint surface forms; contexts mostly
// come from the cluster's own surfaces. Some channels are left empty.
std::vector<TypingInstance> TwoClusterSfc(std::mt19937_64& rng, int n) {
  auto token = [&](int cls) {
    const bool shared = rng() % 10 < 3;
    return shared ? "shared" + std::to_string(rng() % 15)
                  : (cls == 0 ? "north" : "south") + std::to_string(rng() % 20);
  };
  std::vector<TypingInstance> out;
  for (int i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng() % 2);
    std::vector<std::string> left, sf, right;
    const int nl = static_cast<int>(rng() % 11), nr = static_cast<int>(rng() % 11);
    for (int k = 0; k < nl; ++k) left.push_back(token(cls));
    for (int k = 0; k < nr; ++k) right.push_back(token(cls));
    const int ns = 1 + static_cast<int>(rng() % 2);
    for (int k = 0; k < ns; ++k) sf.push_back((cls == 0 ? "N" : "S") + std::to_string(rng() % 25));
    out.push_back(Inst(left, sf, right, cls));
  }
  return out;
}

void TypingCriterion(Verdict* v) {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  auto train = TwoClusterSfc(rng, 2000);
  auto test = TwoClusterSfc(rng, 500);
  TypingConfig cfg;
  cfg.flavor = Flavor::kSurface;
  cfg.num_classes = 2;
  cfg.hidden = 64;
  cfg.emb_dim = 32;
  TypingTables tables;
  tables.vocab_source = &train;
  TypingModel model(cfg, tables, 1);
  TypingHyperparams hp;
  hp.epochs = 20;
  hp.patience = 0;
  auto history = TrainTyping(&model, train, {}, hp);
  v->Expect(history.size() <= 20, "trained " + std::to_string(history.size()) + " epochs");
  const double f1 = EvaluateTyping(model, test).micro_f1;
  v->Expect(f1 >= 0.95, "test micro-F1 " + Fmt("%.4f", f1));

  std::vector<ContextWindow> probes;
  for (const auto& t : test) probes.push_back(t.context);
  probes.push_back({{}, {}, {}, ContextFormat::kSFC});
  probes.push_back({{"north1"}, {}, {}, ContextFormat::kSFC});
  probes.push_back({{}, {"N3"}, {}, ContextFormat::kSFC});
  probes.push_back({{}, {}, {"unseen"}, ContextFormat::kSFC});
  double worst = 0;
  for (const auto& w : probes) {
    double sum = 0;
    for (double p : model.Predict(w)) sum += p;
    worst = std::max(worst, std::fabs(sum - 1.0));
  }
  v->Expect(worst <= 1e-6, "softmax sum off by " + Fmt("%.2e", worst));
  const double t = Seconds(start);
  v->Expect(t < 120.0, "runtime " + Fmt("%.1f", t) + " s");
  v->Note("test micro-F1 " + Fmt("%.4f", f1) + " after " + std::to_string(history.size()) +
          " epochs, max |sum-1| " + Fmt("%.1e", worst) + ", " + Fmt("%.1f", t) + " s");
}

// ---- 8: ranker -------------------------------------------------------------------

FeatureTable SeparableTable(int groups, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  FeatureTable t;
  t.names = Names(4);
  const double w[4] = {1.0, -2.0, 0.5, 1.5};
  for (int g = 0; g < groups; ++g) {
    for (int c = 0; c < 4; ++c) {
      const bool positive = c == g % 4;
      FeatureRow r;
      r.doc_id = "d" + std::to_string(g / 10);
      r.mention = g % 10;
      r.entity_id = "e" + std::to_string(c);
      for (;;) {
        r.values.clear();
        double s = 0;
        for (int k = 0; k < 4; ++k) {
          r.values.push_back(u(rng));
          s += w[k] * r.values.back();
        }
        if (positive ? s > 0.4 : s < 0.2) break;
      }
      r.label = positive ? 1 : 0;
      t.rows.push_back(r);
    }
  }
  return t;
}

void RankerCriterion(Verdict* v) {
  // Trained to convergence: the fixture's margin is narrow (0.2 in w.x), so
  // the 20-epoch default stops just short of it on some draws.
  RankerHyperparams hp;
  hp.batch_size = 100;
  hp.epochs = 100;
  hp.patience = 0;
  double worst = 1.0;
  bool identical = true;
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    FeatureTable train = SeparableTable(100, seed);
    RankerModel a(RankerCfg(4), seed);
    TrainRanker(&a, train, nullptr, hp);
    int correct = 0;
    for (const auto& r : train.rows) {
      const double p = a.TrueProb(r.values);
      correct += (p >= 0.5) == (r.label == 1);
      identical &= p == a.TrueProb(r.values);
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(train.rows.size());
    v->Expect(acc >= 0.99, "fixture " + std::to_string(seed) + " training accuracy " + Fmt("%.4f", acc));
    worst = std::min(worst, acc);
    if (seed == 1) {
      // A second training run from the same seed infers the same bits.
      RankerModel b(RankerCfg(4), seed);
      TrainRanker(&b, train, nullptr, hp);
      for (const auto& r : train.rows) identical &= a.TrueProb(r.values) == b.TrueProb(r.values);
    }
  }
  v->Expect(identical, "inference differs between runs");
  v->Note("min training accuracy " + Fmt("%.4f", worst) + " over 3 fixtures, inference bit-identical");
}

// ---- 9: end-to-end synthetic pipeline ---------------------------------------

class Options {
 public:
  explicit Options(const std::map<std::string, std::string>& kv) {
    cmt_options_create(&o_);
    for (const auto& [k, val] : kv) cmt_options_set(o_, k.c_str(), val.c_str());
  }
  ~Options() { cmt_options_free(o_); }
  Options(const Options&) = delete;
  Options& operator=(const Options&) = delete;
  const cmt_options* get() const { return o_; }

 private:
  cmt_options* o_ = nullptr;
};

struct PipelineResult {
  double stage1_f1 = 0, stage2_f1 = 0;
};

// Runs the documented subcommand sequence through the C API. Throws on the
// first failing stage.
PipelineResult RunSyntheticPipeline(const std::string& dir, const std::string& seed) {
  using Kv = std::map<std::string, std::string>;
  auto run = [&](const char* stage, Kv kv) {
    kv["seed"] = seed;
    Options opts(kv);
    if (cmt_stage_run(stage, opts.get(), nullptr, nullptr) != CMT_OK) {
      throw std::runtime_error(std::string(stage) + ": " + cmt_last_error());
    }
  };
  const std::string D = dir + "/";
  run("synth-fixture", {{"out-dir", dir}});
  for (const char* split : {"train", "test"}) {
    run("ingest", {{"kb", D + "kb.tsv"}, {"types", D + "types.tsv"},
                   {"surface-forms", D + "surface_forms.tsv"}, {"corpus", D + split + ".corpus"},
                   {"out-kb", D + "kb.art"}, {"out-surface-forms", D + "sf.art"},
                   {"out-corpus", D + split + ".art"}});
  }
  run("mine-coocc", {{"corpus", D + "train.art"}, {"out", D + "coocc.tsv"}});
  run("build-streams", {{"kind", "wc"}, {"corpus", D + "train.art"}, {"out", D + "wc.streams"}});
  run("build-streams", {{"kind", "sfc"}, {"corpus", D + "train.art"}, {"out", D + "sfc.pairs"}});
  run("build-streams", {{"kind", "ec"}, {"corpus", D + "train.art"}, {"out", D + "ec.streams"}});
  run("embed", {{"input", D + "wc.streams"}, {"dim", "50"}, {"window", "5"}, {"out", D + "wc.vec"}});
  run("embed", {{"input", D + "sfc.pairs"}, {"mode", "pair"}, {"dim", "50"}, {"out", D + "sfc.vec"}});
  run("embed", {{"input", D + "ec.streams"}, {"dim", "50"}, {"window", "5"}, {"epochs", "10"},
                {"out", D + "ec.vec"}});
  const std::vector<std::pair<std::string, std::string>> flavors = {
      {"Word", "wc"}, {"Surface", "sfc"}, {"Entity", "ec"}};
  for (const auto& [flavor, vec] : flavors) {
    run("cluster", {{"flavor", flavor}, {"k", "5"}, {"embeddings", D + vec + ".vec"}, {"kb", D + "kb.art"},
                    {"out", D + flavor + ".clusters"}});
    run("build-typing-data", {{"corpus", D + "train.art"}, {"clustering", D + flavor + ".clusters"},
                              {"out", D + flavor + ".typing"}});
    Kv t = {{"train", D + flavor + ".typing"}, {"dev-fraction", "0.1"}, {"flavor", flavor},
            {"classes", "5"}, {"hidden", "16"}, {"dropout", "0.2"}, {"emb-dim", "16"},
            {"out", D + flavor + ".model"}};
    if (flavor != "Surface") t["context-vectors"] = D + vec + ".vec";
    run("train-typing", t);
  }
  for (const std::string split : {"train", "test"}) {
    run("candgen", {{"corpus", D + split + ".art"}, {"kb", D + "kb.art"}, {"types", D + "types.tsv"},
                    {"surface-forms", D + "sf.art"}, {"coocc", D + "coocc.tsv"},
                    {"out", D + split + ".cands"}});
  }
  auto resources = [&](const std::string& split) {
    return Kv{{"corpus", D + split + ".art"},
              {"candidates", D + split + ".cands"},
              {"kb", D + "kb.art"},
              {"types", D + "types.tsv"},
              {"surface-forms", D + "sf.art"},
              {"clusterings", D + "Word.clusters," + D + "Surface.clusters," + D + "Entity.clusters"},
              {"typing-models", D + "Word.model," + D + "Surface.model," + D + "Entity.model"},
              {"entity-vectors", D + "ec.vec"},
              {"word-vectors", D + "wc.vec"},
              {"reference-corpus", D + "train.art"}};
  };
  Kv f1 = resources("train");
  f1["out"] = D + "stage1.features";
  run("features", f1);
  run("train-ranker", {{"features", D + "stage1.features"}, {"out", D + "stage1.ranker"}});
  Kv f2 = resources("train");
  f2["stage"] = "2";
  f2["stage1-model"] = D + "stage1.ranker";
  f2["out"] = D + "stage2.features";
  run("features", f2);
  run("train-ranker", {{"features", D + "stage2.features"}, {"out", D + "stage2.ranker"}});
  Kv rank = resources("test");
  rank["stage1-model"] = D + "stage1.ranker";
  rank["stage2-model"] = D + "stage2.ranker";
  rank["out"] = D + "final.pred";
  rank["out-stage1"] = D + "stage1.pred";
  run("rank", rank);

  PipelineResult r;
  cmt_metrics m;
  if (cmt_evaluate_files((D + "test.art").c_str(), (D + "stage1.pred").c_str(), &m) != CMT_OK) {
    throw std::runtime_error(cmt_last_error());
  }
  r.stage1_f1 = m.f1;
  if (cmt_evaluate_files((D + "test.art").c_str(), (D + "final.pred").c_str(), &m) != CMT_OK) {
    throw std::runtime_error(cmt_last_error());
  }
  r.stage2_f1 = m.f1;
  return r;
}

void PipelineCriterion(Verdict* v) {
  auto start = std::chrono::steady_clock::now();
  const auto root = std::filesystem::temp_directory_path() /
                    ("cmtned_acceptance_" + std::to_string(std::random_device{}()));
  std::string per_seed;
  double worst1 = 1, worst2 = 1;
  for (int seed = 1; seed <= 5; ++seed) {
    const std::string dir = (root / ("seed" + std::to_string(seed))).string();
    try {
      auto r = RunSyntheticPipeline(dir, std::to_string(seed));
      worst1 = std::min(worst1, r.stage1_f1);
      worst2 = std::min(worst2, r.stage2_f1);
      v->Expect(r.stage2_f1 >= 0.90, "seed " + std::to_string(seed) + " F1 " + Fmt("%.4f", r.stage2_f1));
      v->Expect(r.stage2_f1 >= r.stage1_f1 - 0.01,
                "seed " + std::to_string(seed) + " stage 2 " + Fmt("%.4f", r.stage2_f1) + " < stage 1 " +
                    Fmt("%.4f", r.stage1_f1) + " - 0.01");
      per_seed += (per_seed.empty() ? "" : " ") + Fmt("%.3f", r.stage1_f1) + "/" + Fmt("%.3f", r.stage2_f1);
    } catch (const std::exception& e) {
      v->Expect(false, "seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  std::error_code ec;
  std::filesystem::remove_all(root, ec);
  const double t = Seconds(start);
  v->Expect(t < 600.0, "runtime " + Fmt("%.0f", t) + " s");
  v->Note("stage1/stage2 F1 per seed " + per_seed + ", " + Fmt("%.0f", t) + " s");
}

// ---- 10: metrics ----------------------------------------------------------------

void MetricsCriterion(Verdict* v) {
  auto fx = oracle::FrozenEvalFixture();
  ReportRow row = Evaluate("frozen", fx.golds, fx.preds);
  v->Expect(row.micro.precision == oracle::kFrozenMicroP, "micro P " + Fmt("%.17g", row.micro.precision));
  v->Expect(row.micro.recall == oracle::kFrozenMicroR, "micro R " + Fmt("%.17g", row.micro.recall));
  v->Expect(row.micro.f1 == oracle::kFrozenMicroF1, "micro F1 " + Fmt("%.17g", row.micro.f1));
  v->Expect(row.bot_f1 == oracle::kFrozenBotF1, "BoT F1 " + Fmt("%.17g", row.bot_f1));
  v->Expect(row.inkb == oracle::kFrozenInKb, "InKB " + Fmt("%.17g", row.inkb));
  auto aligned = AlignPredictions(fx.golds, fx.preds);
  const double same = RandomizationTest(fx.golds, aligned, aligned, 10000, 1);
  v->Expect(same == 1.0, "identical outputs p = " + Fmt("%g", same));
  std::vector<GoldMention> golds;
  std::vector<std::optional<std::string>> a, b;
  oracle::SeparationCase(&golds, &a, &b);
  const double sep = RandomizationTest(golds, a, b, 10000, 1);
  v->Expect(sep <= 0.01, "separation p = " + Fmt("%g", sep));
  v->Note("frozen fixture exact, p(identical) = " + Fmt("%g", same) + ", p(separated) = " + Fmt("%.5f", sep));
}

// ---- 11: feature layer ---------------------------------------------------------

void FeatureCriterion(Verdict* v) {
  auto fx = oracle::BuildFeatureFixture();
  for (int stage : {1, 2}) {
    const auto layout = testing::FixtureLayout(stage);
    const std::string expected = oracle::NaiveFeatureDump(fx, layout.names(), stage, 3, 5);
    const std::string got = testing::LibraryFeatureDump(fx, stage);
    const std::string golden = testing::ReadAll(testing::GoldenFeaturePath(stage));
    v->Expect(!golden.empty(), "stage " + std::to_string(stage) + " golden file missing");
    v->Expect(got == expected, "stage " + std::to_string(stage) + " differs from the oracle");
    v->Expect(got == golden, "stage " + std::to_string(stage) + " differs from the golden file");
  }
  v->Note("both stages equal oracle and golden files");
}

}  // namespace
}  // namespace cmt

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* title;
    std::function<void(cmt::Verdict*)> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "string metrics", cmt::StringMetrics},
      {2, "candidate generator", cmt::CandidateGeneration},
      {3, "k-means", cmt::KMeansCriterion},
      {4, "Brown clustering", cmt::BrownCriterion},
      {5, "AGCCS and typing-confusion penalty", cmt::AgccsCriterion},
      {6, "gradient checks", cmt::GradientCriterion},
      {7, "typing model", cmt::TypingCriterion},
      {8, "ranker", cmt::RankerCriterion},
      {9, "end-to-end synthetic pipeline", cmt::PipelineCriterion},
      {10, "metrics", cmt::MetricsCriterion},
      {11, "feature layer", cmt::FeatureCriterion},
  };
  // Optional filter: criterion ids to run, e.g. `acceptance 1 9`.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    cmt::Verdict v;
    try {
      c.check(&v);
    } catch (const std::exception& e) {
      v.Expect(false, std::string("exception: ") + e.what());
    }
    failed += !v.ok();
    std::printf("%s [%2d] %s: %s\n", v.ok() ? "PASS" : "FAIL", c.id, c.title, v.Summary().c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}

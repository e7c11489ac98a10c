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

#include <cmath>
#include <random>

#include "core/clustering.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"
#include "test_util.hpp"

namespace cmt {
namespace {

std::vector<std::vector<double>> Blobs(uint64_t seed, int n, std::vector<int>* truth) {
  const double centers[3][2] = {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.05);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < n; ++i) {
    int c = i % 3;
    pts.push_back({centers[c][0] + nd(rng), centers[c][1] + nd(rng)});
    truth->push_back(c);
  }
  return pts;
}

TEST_CASE("k-means recovers separated blobs with monotone inertia") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<int> truth;
    auto pts = Blobs(seed, 300, &truth);
    KMeansOptions o;
    o.k = 3;
    o.seed = seed;
    auto r = KMeans(pts, o);
    CHECK(oracle::AdjustedRand(r.labels, truth) >= 0.99);
    for (size_t i = 1; i < r.log.size(); ++i) {
      CHECK(r.log[i].inertia <= r.log[i - 1].inertia * (1 + 1e-12));
    }
    // Stopped either by the 1% rule or the iteration cap.
    CHECK((r.log.back().changed_fraction <= 0.01 || r.log.size() == 50));
    for (size_t i = 0; i + 1 < r.log.size(); ++i) CHECK(r.log[i].changed_fraction > 0.01);
  }
}

TEST_CASE("k-means edge cases") {
  std::vector<std::vector<double>> pts = {{0, 0}, {5, 5}, {9, 1}};
  KMeansOptions o;
  o.k = 3;
  auto r = KMeans(pts, o);
  CHECK(r.inertia == 0.0);
  CHECK(std::set<int>(r.labels.begin(), r.labels.end()).size() == 3);
  o.k = 4;
  CHECK_THROWS_AS(KMeans(pts, o), cmt::Error);
  o.k = 1;
  CHECK_THROWS_AS(KMeans(pts, o), cmt::Error);
  // Parallel assignment agrees with the sequential run.
  std::vector<int> truth;
  auto blobs = Blobs(9, 90, &truth);
  KMeansOptions s;
  s.k = 3;
  auto seq = KMeans(blobs, s);
  s.threads = 4;
  CHECK(KMeans(blobs, s).labels == seq.labels);
}

TEST_CASE("k-means on unit-square corners picks the inertia-optimal split") {
  // Rectangle so the optimal 2-split is unique: pairs along the short side.
  std::vector<std::vector<double>> pts = {{0, 0}, {0, 1}, {3, 0}, {3, 1}};
  auto parts = oracle::PartitionsIntoK(4, 2);
  double best = 1e300;
  std::vector<int> best_labels;
  for (const auto& p : parts) {
    double inertia = 0;
    for (int c = 0; c < 2; ++c) {
      double mx = 0, my = 0;
      int n = 0;
      for (int i = 0; i < 4; ++i) {
        if (p[i] == c) {
          mx += pts[i][0];
          my += pts[i][1];
          ++n;
        }
      }
      mx /= n;
      my /= n;
      for (int i = 0; i < 4; ++i) {
        if (p[i] == c) inertia += std::pow(pts[i][0] - mx, 2) + std::pow(pts[i][1] - my, 2);
      }
    }
    if (inertia < best) {
      best = inertia;
      best_labels = p;
    }
  }
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    KMeansOptions o;
    o.k = 2;
    o.seed = seed;
    auto r = KMeans(pts, o);
    CHECK(oracle::AdjustedRand(r.labels, best_labels) == doctest::Approx(1.0));
  }
  // The square itself: each cluster is a pair of adjacent corners.
  std::vector<std::vector<double>> sq = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    KMeansOptions o;
    o.k = 2;
    o.seed = seed;
    auto r = KMeans(sq, o);
    CHECK(r.inertia == doctest::Approx(1.0));
    CHECK(r.labels[0] != r.labels[3]);
    CHECK(r.labels[1] != r.labels[2]);
  }
}

TEST_CASE("kmeans over an embedding table keeps only requested tokens") {
  EmbeddingTable t(2);
  t.Add("E1", std::vector<double>{0, 0});
  t.Add("word", std::vector<double>{50, 50});
  t.Add("E2", std::vector<double>{0, 0.1});
  t.Add("E3", std::vector<double>{9, 9});
  KMeansOptions o;
  o.k = 2;
  auto c = KMeansCluster(t, Flavor::kWord, o, {"E1", "E2", "E3", "missing"}, nullptr);
  CHECK(c.assignment.size() == 3);
  CHECK(c.Lookup("E1") == c.Lookup("E2"));
  CHECK(c.Lookup("E1") != c.Lookup("E3"));
  CHECK_FALSE(c.Lookup("word"));
}

std::map<std::string, int> ExhaustiveBest(const std::vector<std::vector<std::string>>& streams,
                                          const std::vector<std::string>& vocab, int k) {
  double best = -1;
  std::map<std::string, int> best_map;
  for (const auto& p : oracle::PartitionsIntoK(static_cast<int>(vocab.size()), k)) {
    std::map<std::string, int> m;
    for (size_t i = 0; i < vocab.size(); ++i) m[vocab[i]] = p[i];
    double ami = oracle::AverageMutualInformation(streams, m);
    if (ami > best + 1e-12) {
      best = ami;
      best_map = m;
    }
  }
  return best_map;
}

std::vector<int> Labels(const std::map<std::string, int>& m, const std::vector<std::string>& vocab) {
  std::vector<int> out;
  for (const auto& v : vocab) out.push_back(m.at(v));
  return out;
}

TEST_CASE("brown clustering matches the exhaustive optimum on interchangeable tokens") {
  std::vector<std::vector<std::string>> streams;
  for (int i = 0; i < 5; ++i) {
    streams.push_back({"x", "A", "x"});
    streams.push_back({"x", "B", "x"});
  }
  const std::vector<std::string> vocab = {"A", "B", "x"};
  auto c = BrownCluster(streams, 2, nullptr);
  auto best = ExhaustiveBest(streams, vocab, 2);
  CHECK(oracle::AdjustedRand(Labels(c.assignment, vocab), Labels(best, vocab)) == 1.0);
  CHECK(c.Lookup("A") == c.Lookup("B"));
  CHECK(c.Lookup("A") != c.Lookup("x"));
  // k equal to the vocabulary: identity.
  auto id = BrownCluster(streams, 3, nullptr);
  CHECK(std::set<int>{*id.Lookup("A"), *id.Lookup("B"), *id.Lookup("x")}.size() == 3);
  CHECK_THROWS_AS(BrownCluster(streams, 4, nullptr), cmt::Error);
}

TEST_CASE("brown merges are locally optimal and order-invariant") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<std::string>> streams;
    for (int d = 0; d < 15; ++d) {
      std::vector<std::string> s;
      int len = 2 + rng() % 8;
      for (int t = 0; t < len; ++t) s.push_back("t" + std::to_string(rng() % 9));
      streams.push_back(s);
    }
    std::vector<BrownMerge> trace;
    auto c = BrownCluster(streams, 3, &trace);
    for (const auto& step : trace) {
      auto ami_after = [&](int a, int b) {
        std::map<std::string, int> m;
        for (int i = 0; i < static_cast<int>(step.clusters.size()); ++i) {
          for (const auto& t : step.clusters[i]) m[t] = i == b ? a : i;
        }
        return oracle::AverageMutualInformation(streams, m);
      };
      double chosen = ami_after(step.a, step.b);
      for (int a = 0; a < static_cast<int>(step.clusters.size()); ++a) {
        for (int b = a + 1; b < static_cast<int>(step.clusters.size()); ++b) {
          CHECK(chosen >= ami_after(a, b) - 1e-9);
        }
      }
    }
    auto reversed = streams;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(BrownCluster(reversed, 3, nullptr).assignment == c.assignment);
  }
}

TEST_CASE("clustering file round trip and assign_types") {
  Clustering c;
  c.flavor = Flavor::kSynset;
  c.k = 13;
  c.assignment = {{"A", 12}, {"B", 0}};
  testing::TempDir dir;
  WriteClustering(dir.File("c.tsv"), c);
  auto back = ReadClustering(dir.File("c.tsv"));
  CHECK(back.flavor == Flavor::kSynset);
  CHECK(back.k == 13);
  CHECK(back.assignment == c.assignment);
  auto bad = dir.Write("bad.tsv", "#Word 2\nA\t5\n");
  CHECK_THROWS_AS(ReadClustering(bad), cmt::Error);

  KnowledgeBase kb;
  kb.Add({"A"});
  kb.Add({"C"});
  AssignTypes(c, &kb);
  CHECK(kb.Find("A")->cluster_types[static_cast<int>(Flavor::kSynset)] == 12);
  CHECK_FALSE(kb.Find("C")->cluster_types[static_cast<int>(Flavor::kSynset)]);
  c.assignment["A"] = 3;
  AssignTypes(c, &kb);
  CHECK(kb.Find("A")->cluster_types[static_cast<int>(Flavor::kSynset)] == 3);
}

TEST_CASE("agccs") {
  Clustering c;
  c.k = 5;
  c.assignment = {{"A", 1}, {"B", 1}, {"C", 2}, {"D", 3}, {"E", 4}};
  std::vector<GoldCandidates> ms = {{{"A", "B", "C"}, "A"}, {{"D", "E"}, "D"}};
  CHECK(Agccs(c, ms, nullptr) == doctest::Approx(1.5));
  Clustering all;
  all.k = 1;
  all.assignment = {{"A", 0}, {"B", 0}, {"C", 0}, {"D", 0}, {"E", 0}};
  CHECK(Agccs(all, ms, nullptr) == doctest::Approx(2.5));
  CHECK_THROWS_AS(Agccs(c, {{{"A"}, "Z"}}, nullptr), cmt::Error);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Clustering rc;
    rc.k = 4;
    std::map<std::string, int> cmap;
    for (int e = 0; e < 15; ++e) {
      if (rng() % 5 == 0) continue;
      int cl = rng() % 4;
      rc.assignment["E" + std::to_string(e)] = cl;
      cmap["E" + std::to_string(e)] = cl;
    }
    std::vector<GoldCandidates> mentions;
    std::vector<std::pair<std::vector<std::string>, std::string>> plain;
    int n = 1 + rng() % 10;
    for (int m = 0; m < n; ++m) {
      GoldCandidates g;
      int nc = 1 + rng() % 10;
      for (int x = 0; x < nc; ++x) g.candidates.push_back("E" + std::to_string(rng() % 15));
      g.gold = g.candidates[rng() % nc];
      mentions.push_back(g);
      plain.emplace_back(g.candidates, g.gold);
    }
    auto want = oracle::AgccsBrute(plain, cmap);
    if (!want) {
      CHECK_THROWS_AS(Agccs(rc, mentions, nullptr), cmt::Error);
      continue;
    }
    CHECK(Agccs(rc, mentions, nullptr) == *want);
  }
}

VariantProbs Variant(const std::string& name, Flavor f, std::vector<std::vector<double>> p) {
  VariantProbs v;
  v.name = name;
  v.flavor = f;
  for (auto& row : p) v.probs.emplace_back(row.begin(), row.end());
  return v;
}

TEST_CASE("typing-confusion penalty and combination selection") {
  std::vector<GoldCandidates> ms = {{{"G", "X", "Y"}, "G"}};
  CHECK(ConfusionPenalty(Variant("w", Flavor::kWord, {{0.9, 0.05, 0.05}}), ms) == 0.0);
  CHECK(ConfusionPenalty(Variant("w", Flavor::kWord, {{0.3, 0.5, 0.2}}), ms) == doctest::Approx(0.2));
  auto v1 = Variant("w", Flavor::kWord, {{0.3, 0.5, 0.2}});
  auto v2 = Variant("s", Flavor::kSurface, {{0.3, 0.4, 0.2}});
  auto combos = SelectCombinations({v1, v2}, ms, 10);
  REQUIRE(combos.size() == 1);
  CHECK(combos[0].penalty == doctest::Approx(0.3));
  auto missing = v1;
  missing.probs[0][1] = std::nullopt;
  try {
    ConfusionPenalty(missing, ms);
    FAIL("expected error");
  } catch (const cmt::Error& e) {
    std::string what = e.what();
    CHECK(what.find("mention 0") != std::string::npos);
    CHECK(what.find("'X'") != std::string::npos);
    CHECK(what.find("Word") != std::string::npos);
  }
  CHECK_THROWS_AS(SelectCombinations({Variant("e", Flavor::kEntity, {{1, 0, 0}})}, ms, 10),
                  cmt::Error);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + rng() % 10;
    std::vector<GoldCandidates> mentions;
    std::vector<int> gold_index;
    std::vector<VariantProbs> variants;
    for (int m = 0; m < n; ++m) {
      GoldCandidates g;
      int nc = 1 + rng() % 10;
      for (int x = 0; x < nc; ++x) g.candidates.push_back("C" + std::to_string(m) + "_" + std::to_string(x));
      int gi = rng() % 4 == 0 ? -1 : static_cast<int>(rng() % nc);
      g.gold = gi >= 0 ? g.candidates[gi] : "absent";
      gold_index.push_back(gi);
      mentions.push_back(g);
    }
    const Flavor flavors[] = {Flavor::kWord, Flavor::kSurface, Flavor::kSynset, Flavor::kBrown};
    std::map<std::string, double> brute;
    for (Flavor f : flavors) {
      for (int v = 0; v < 2; ++v) {
        std::vector<std::vector<double>> p;
        for (const auto& g : mentions) {
          std::vector<double> row;
          for (size_t x = 0; x < g.candidates.size(); ++x) row.push_back(u(rng));
          p.push_back(row);
        }
        auto name = std::string(FlavorName(f)) + std::to_string(v);
        brute[name] = oracle::ConfusionPenaltyBrute(p, gold_index);
        variants.push_back(Variant(name, f, p));
        CHECK(ConfusionPenalty(variants.back(), mentions) == doctest::Approx(brute[name]).epsilon(1e-12));
      }
    }
    auto sel = SelectCombinations(variants, mentions, 10);
    CHECK(sel.size() == 10);
    for (size_t i = 0; i < sel.size(); ++i) {
      double sum = 0;
      for (const auto& name : sel[i].combo) sum += brute[name];
      CHECK(sel[i].penalty == doctest::Approx(sum).epsilon(1e-12));
      if (i) CHECK(sel[i - 1].penalty <= sel[i].penalty);
    }
    // The best of all 16 combinations comes first.
    double best = 1e300;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d)
            best = std::min(best, brute["Word" + std::to_string(a)] + brute["Surface" + std::to_string(b)] +
                                      brute["Synset" + std::to_string(c)] + brute["Brown" + std::to_string(d)]);
    CHECK(sel[0].penalty == doctest::Approx(best).epsilon(1e-12));
  }
}

}  // namespace
}  // namespace cmt

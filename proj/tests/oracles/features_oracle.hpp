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

// Frozen three-document feature fixture and a slot-by-slot naive
// recomputation. The oracle reads plain fixture data only (records are
// scanned linearly, types read from the entity directly); it never calls the
// feature module.

#ifndef CMTNED_TESTS_FEATURES_ORACLE_HPP_
#define CMTNED_TESTS_FEATURES_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/candgen.hpp"
#include "core/corpus.hpp"
#include "core/embeddings.hpp"
#include "core/features.hpp"

namespace cmt::oracle {

struct FixtureCandidate {
  std::string entity;
  std::string best_sf;
  int edit = 0;
  std::vector<int> sf_type_bits;  // SurfaceType indices set
  std::map<std::string, double> typing;  // flavor name -> P
  double rank_prob = 0.0;
  double doc_sim = 0.0;
};

struct FixtureDoc {
  std::string id;
  std::vector<std::string> golds;  // per mention
  std::vector<std::vector<FixtureCandidate>> mentions;
};

struct FeatureFixture {
  KnowledgeBase kb;
  SurfaceFormStore store;
  EmbeddingTable vectors{3};
  std::vector<FixtureDoc> docs;
};

inline const std::vector<std::string>& FixtureFlavors() {
  static const std::vector<std::string> f = {"Word", "Surface", "Synset", "Brown", "Entity"};
  return f;
}

// Deterministic "random" value in [0, 1) from small integers.
inline double FixtureValue(int a, int b, int c) {
  return static_cast<double>((a * 37 + b * 11 + c * 7 + 3) % 29) / 29.0;
}

inline FeatureFixture BuildFeatureFixture() {
  FeatureFixture fx;
  const char* kTypes[] = {"Person", "Organization", "Location", "SportsTeam", "Misc"};
  for (int e = 1; e <= 12; ++e) {
    Entity ent;
    ent.id = "E" + std::to_string(e);
    if (e != 12) ent.coarse_type = ParseCoarseType(kTypes[e % 5]);
    fx.kb.Add(ent);
    // Two surfaces per entity; E12 is absent from the KB lookups below via E13.
    fx.store.Add({ent.id, "name" + std::to_string(e), e * 3, 0});
    fx.store.Add({ent.id, "alias" + std::to_string(e), (e % 4) + 1, kFlagRedirect});
    if (e != 7) {  // E7 has no vector
      std::vector<double> v = {std::cos(e * 0.7), std::sin(e * 1.3), (e % 3) - 1.0};
      fx.vectors.Add(ent.id, v);
    }
  }
  fx.store.Add({"E13", "name13", 1, 0});  // unknown to the KB
  std::vector<double> zero = {0, 0, 0};
  fx.vectors.Add("E13", zero);

  auto cand = [&](int doc, int m, int k, const std::string& e, bool alias, int edit,
                  std::vector<int> bits) {
    FixtureCandidate c;
    c.entity = e;
    std::string num = e.substr(1);
    c.best_sf = alias ? "alias" + num : "name" + num;
    c.edit = edit;
    c.sf_type_bits = std::move(bits);
    int f = 0;
    for (const auto& name : FixtureFlavors()) c.typing[name] = FixtureValue(doc * 5 + m, k, ++f);
    c.rank_prob = FixtureValue(doc + 11, m * 3 + k, 2);
    c.doc_sim = FixtureValue(doc + 2, m, k * 5) * 2.0 - 1.0;
    return c;
  };

  FixtureDoc a{"docA", {"E1", "E1", "E2"}, {}};
  a.mentions.push_back({cand(0, 0, 0, "E1", false, 0, {0}), cand(0, 0, 1, "E2", true, 2, {1, 5}),
                        cand(0, 0, 2, "E3", false, 4, {6})});
  a.mentions.push_back({cand(0, 1, 0, "E4", false, 1, {0, 10}), cand(0, 1, 1, "E1", true, 3, {1})});
  a.mentions.push_back({cand(0, 2, 0, "E2", false, 0, {0})});  // singleton
  fx.docs.push_back(a);

  // Equal typing probabilities force the id tie-break; E13 lacks KB data
  // and has a zero vector; E7 has no vector.
  FixtureDoc b{"docB", {"E6", "E13"}, {}};
  FixtureCandidate b0 = cand(1, 0, 0, "E6", false, 1, {0});
  FixtureCandidate b1 = cand(1, 0, 1, "E5", false, 1, {2});
  b1.typing = b0.typing;
  b1.doc_sim = b0.doc_sim;
  b.mentions.push_back({b0, b1});
  b.mentions.push_back({cand(1, 1, 0, "E13", false, 2, {}), cand(1, 1, 1, "E7", true, 3, {3, 4})});
  fx.docs.push_back(b);

  // Seven mentions: exercises the M window, top-N, and the later-WikiID rule.
  FixtureDoc c{"docC", {}, {}};
  int ents[7][4] = {{8, 9, 10, 11}, {9, 12, 0, 0}, {8, 10, 0, 0}, {11, 0, 0, 0},
                    {10, 9, 8, 0},  {12, 11, 0, 0}, {8, 7, 9, 10}};
  for (int m = 0; m < 7; ++m) {
    std::vector<FixtureCandidate> set;
    for (int k = 0; k < 4 && ents[m][k]; ++k) {
      std::vector<int> bits;
      if ((m + k) % 3 == 0) bits.push_back(0);
      if ((m * k) % 4 == 1) bits.push_back(7);
      set.push_back(cand(2, m, k, "E" + std::to_string(ents[m][k]), (m + k) % 2 == 1,
                         (m + 2 * k) % 5, bits));
    }
    c.golds.push_back(set.front().entity);
    c.mentions.push_back(set);
  }
  fx.docs.push_back(c);
  return fx;
}

// Library-side view of one fixture document.
inline void FixtureToSets(const FixtureDoc& doc, CandidateSets* sets, DocumentScores* scores) {
  sets->clear();
  scores->clear();
  for (const auto& m : doc.mentions) {
    sets->emplace_back();
    scores->emplace_back();
    for (const auto& c : m) {
      CandidateMatch cm;
      cm.entity_id = c.entity;
      cm.best_sf = c.best_sf;
      cm.edit_distance = c.edit;
      for (int b : c.sf_type_bits) cm.sf_types.set(b);
      sets->back().push_back(cm);
      CandidateScores s;
      for (const auto& [name, p] : c.typing) s.typing[static_cast<int>(ParseFlavor(name))] = p;
      s.rank_prob = c.rank_prob;
      s.doc_sim = c.doc_sim;
      scores->back().push_back(s);
    }
  }
}

// Sort-based max-diff: order by value descending then id ascending.
inline std::vector<double> NaiveMaxDiff(const std::vector<double>& v, const std::vector<std::string>& ids) {
  std::vector<double> out(v.size(), 0.0);
  if (v.size() < 2) return out;
  std::vector<size_t> order(v.size());
  for (size_t i = 0; i < v.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return v[a] != v[b] ? v[a] > v[b] : ids[a] < ids[b];
  });
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[order[0]] - v[i];
  out[order[0]] = v[order[0]] - v[order[1]];
  return out;
}

inline int64_t ScanFreq(const SurfaceFormStore& store, const std::string& entity,
                        const std::string* surface) {
  int64_t total = 0;
  for (const auto& r : store.records()) {
    if (r.entity_id == entity && (!surface || r.surface == *surface)) total += r.frequency;
  }
  return total;
}

inline double NaiveLog(int64_t f) { return f > 0 ? std::log(static_cast<double>(f)) : 0.0; }

inline std::optional<double> NaiveCos(const EmbeddingTable& t, const std::string& a, const std::string& b) {
  int ia = -1, ib = -1;
  for (size_t i = 0; i < t.tokens().size(); ++i) {
    if (t.tokens()[i] == a) ia = static_cast<int>(i);
    if (t.tokens()[i] == b) ib = static_cast<int>(i);
  }
  if (ia < 0 || ib < 0) return std::nullopt;
  auto x = t.Row(ia);
  auto y = t.Row(ib);
  double d = 0, nx = 0, ny = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    d += x[k] * y[k];
    nx += x[k] * x[k];
    ny += y[k] * y[k];
  }
  if (nx == 0 || ny == 0) return std::nullopt;
  return d / std::sqrt(nx) / std::sqrt(ny);
}

// Named slot values for every (mention, candidate) of |doc|.
inline std::vector<std::vector<std::map<std::string, double>>> NaiveFeatures(
    const FeatureFixture& fx, const FixtureDoc& doc, int stage, int top_n, int window) {
  const char* kSf[] = {"WikiID",   "Redirect",     "Disambiguation", "FirstName",   "Surname", "FirstWord",
                       "LastWord", "PrefixPhrase", "SuffixPhrase",   "BeforeComma", "OrgAcronym"};
  const char* kEt[] = {"Person", "Organization", "Location", "SportsTeam", "Misc"};
  std::vector<std::string> flavors = {"Word", "Surface", "Synset", "Brown"};
  if (stage == 2) flavors.push_back("Entity");
  const auto& ms = doc.mentions;
  std::vector<std::vector<std::map<std::string, double>>> out(ms.size());
  for (size_t i = 0; i < ms.size(); ++i) {
    std::vector<std::string> ids;
    std::vector<double> sfl, ds;
    double edits = 0;
    for (const auto& c : ms[i]) {
      ids.push_back(c.entity);
      sfl.push_back(NaiveLog(ScanFreq(fx.store, c.entity, &c.best_sf)));
      ds.push_back(c.doc_sim);
      edits += c.edit;
    }
    auto md_sf = NaiveMaxDiff(sfl, ids);
    auto md_ds = NaiveMaxDiff(ds, ids);
    std::map<std::string, std::vector<double>> md_t;
    for (const auto& f : flavors) {
      std::vector<double> v;
      for (const auto& c : ms[i]) v.push_back(c.typing.at(f));
      md_t[f] = NaiveMaxDiff(v, ids);
    }
    for (size_t k = 0; k < ms[i].size(); ++k) {
      const auto& c = ms[i][k];
      std::map<std::string, double> row;
      row["sf_edit_distance"] = c.edit;
      row["entity_log_freq"] = NaiveLog(ScanFreq(fx.store, c.entity, nullptr));
      for (int t = 0; t < 11; ++t) {
        row[std::string("sf_type_") + kSf[t]] =
            std::count(c.sf_type_bits.begin(), c.sf_type_bits.end(), t) ? 1.0 : 0.0;
      }
      const Entity* e = nullptr;
      for (const auto& cand : fx.kb.entities()) {
        if (cand.id == c.entity) e = &cand;
      }
      for (int t = 0; t < 5; ++t) {
        row[std::string("entity_type_") + kEt[t]] = e && static_cast<int>(e->coarse_type) == t ? 1.0 : 0.0;
      }
      row["avg_sf_edit_distance"] = edits / ms[i].size();
      row["max_diff_sf_log_freq"] = md_sf[k];
      row["max_diff_doc_sim"] = md_ds[k];
      for (const auto& f : flavors) {
        row["typing_prob_" + f] = c.typing.at(f);
        row["max_diff_typing_prob_" + f] = md_t[f][k];
        double best = -1e300;
        for (const auto& m2 : ms) {
          for (const auto& c2 : m2) {
            if (c2.entity == c.entity) best = std::max(best, c2.typing.at(f));
          }
        }
        row["max_typing_prob_in_doc_" + f] = best;
      }
      if (stage == 2) {
        double prev = -1, next = -1;
        for (size_t j = 0; j < ms.size(); ++j) {
          for (const auto& c2 : ms[j]) {
            if (c2.entity != c.entity) continue;
            if (j < i) prev = std::max(prev, c2.rank_prob);
            bool wiki = std::count(c2.sf_type_bits.begin(), c2.sf_type_bits.end(), 0) > 0;
            if (j > i && wiki) next = std::max(next, c2.rank_prob);
          }
        }
        row["max_ranking_score"] = prev >= 0 ? prev : (next >= 0 ? next : 0.0);
        std::optional<double> best;
        for (size_t j = 0; j < ms.size(); ++j) {
          int d = static_cast<int>(j) - static_cast<int>(i);
          if (d == 0 || std::abs(d) > window) continue;
          std::vector<FixtureCandidate> ranked = ms[j];
          std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
            return x.rank_prob != y.rank_prob ? x.rank_prob > y.rank_prob : x.entity < y.entity;
          });
          for (int r = 0; r < top_n && r < static_cast<int>(ranked.size()); ++r) {
            auto cos = NaiveCos(fx.vectors, c.entity, ranked[r].entity);
            if (!cos) continue;
            double val = *cos * ranked[r].typing.at("Entity");
            if (!best || val > *best) best = val;
          }
        }
        row["max_cos_sim_in_context"] = best.value_or(0.0);
      }
      out[i].push_back(row);
    }
  }
  return out;
}

inline std::string Sixdp(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  return s == "-0.000000" ? "0.000000" : s;
}

// Feature dump body (no artifact header) computed by the oracle.
inline std::string NaiveFeatureDump(const FeatureFixture& fx, const std::vector<std::string>& names,
                                    int stage, int top_n, int window) {
  std::string out = "doc_id\tmention_index\tentity_id";
  for (const auto& n : names) out += "\t" + n;
  out += "\tlabel\n";
  for (const auto& doc : fx.docs) {
    auto rows = NaiveFeatures(fx, doc, stage, top_n, window);
    for (size_t i = 0; i < rows.size(); ++i) {
      for (size_t k = 0; k < rows[i].size(); ++k) {
        const auto& c = doc.mentions[i][k];
        out += doc.id + "\t" + std::to_string(i) + "\t" + c.entity;
        for (const auto& n : names) out += "\t" + Sixdp(rows[i][k].at(n));
        out += std::string("\t") + (doc.golds[i] == c.entity ? "1" : "0") + "\n";
      }
    }
  }
  return out;
}

}  // namespace cmt::oracle

#endif  // CMTNED_TESTS_FEATURES_ORACLE_HPP_

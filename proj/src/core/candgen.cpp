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

#include "core/candgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

namespace cmt {

namespace {

constexpr char32_t kBoundary = 0x1;

char32_t LowerCodePoint(char32_t c) { return (c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c; }

uint64_t PackTrigram(char32_t a, char32_t b, char32_t c) {
  return (static_cast<uint64_t>(a) << 42) | (static_cast<uint64_t>(b) << 21) |
         static_cast<uint64_t>(c);
}

}  // namespace

int Levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

int Levenshtein(std::string_view a, std::string_view b) {
  return Levenshtein(DecodeUtf8(a), DecodeUtf8(b));
}

double JaroWinklerDistance(std::string_view a8, std::string_view b8) {
  std::u32string a = DecodeUtf8(a8);
  std::u32string b = DecodeUtf8(b8);
  // Greedy matching depends on argument order; fix it so the metric is symmetric.
  if (b < a) std::swap(a, b);
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return 1.0;
  const int la = static_cast<int>(a.size());
  const int lb = static_cast<int>(b.size());
  const int window = std::max(0, std::max(la, lb) / 2 - 1);
  std::vector<bool> ma(la, false), mb(lb, false);
  int matches = 0;
  for (int i = 0; i < la; ++i) {
    int lo = std::max(0, i - window);
    int hi = std::min(lb - 1, i + window);
    for (int j = lo; j <= hi; ++j) {
      if (!mb[j] && a[i] == b[j]) {
        ma[i] = mb[j] = true;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 1.0;
  int transpositions = 0;
  for (int i = 0, j = 0; i < la; ++i) {
    if (!ma[i]) continue;
    while (!mb[j]) ++j;
    if (a[i] != b[j]) ++transpositions;
    ++j;
  }
  const double m = matches;
  const double jaro = (m / la + m / lb + (m - transpositions / 2.0) / m) / 3.0;
  int prefix = 0;
  while (prefix < std::min({4, la, lb}) && a[prefix] == b[prefix]) ++prefix;
  const double jw = jaro + prefix * 0.1 * (1.0 - jaro);
  return std::clamp(1.0 - jw, 0.0, 1.0);
}

std::vector<uint64_t> Trigrams(std::string_view s) {
  std::u32string padded;
  padded.push_back(kBoundary);
  for (char32_t c : DecodeUtf8(s)) padded.push_back(LowerCodePoint(c));
  padded.push_back(kBoundary);
  std::vector<uint64_t> out;
  for (size_t i = 0; i + 3 <= padded.size(); ++i) {
    out.push_back(PackTrigram(padded[i], padded[i + 1], padded[i + 2]));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double TrigramOverlap(std::string_view query, std::string_view surface) {
  auto tq = Trigrams(query);
  if (tq.empty()) return 0.0;
  auto ts = Trigrams(surface);
  std::vector<uint64_t> shared;
  std::set_intersection(tq.begin(), tq.end(), ts.begin(), ts.end(), std::back_inserter(shared));
  return static_cast<double>(shared.size()) / static_cast<double>(tq.size());
}

int WordDiff(std::string_view a, std::string_view b) {
  auto wa = SplitWords(a);
  auto wb = SplitWords(b);
  std::set<std::string> in_b(wb.begin(), wb.end());
  std::set<std::string> missing;
  for (const auto& w : wa) {
    if (!in_b.count(w)) missing.insert(w);
  }
  return static_cast<int>(missing.size());
}

bool ContainsPhrase(std::string_view haystack, std::string_view needle) {
  auto h = SplitWords(haystack);
  auto n = SplitWords(needle);
  if (n.empty() || n.size() > h.size()) return false;
  return std::search(h.begin(), h.end(), n.begin(), n.end()) != h.end();
}

const char* ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kDirect: return "direct";
    case Provenance::kContainment: return "containment";
    case Provenance::kCooccurrence: return "cooccurrence";
  }
  return "?";
}

Provenance ParseProvenance(std::string_view name) {
  if (name == "direct") return Provenance::kDirect;
  if (name == "containment") return Provenance::kContainment;
  if (name == "cooccurrence") return Provenance::kCooccurrence;
  Fail(ErrorCode::kParse, "unknown provenance '" + std::string(name) + "'");
}

std::optional<int> AcceptSurface(std::string_view query, std::string_view surface,
                                 const CandGenParams& params) {
  if (TrigramOverlap(query, surface) < params.trigram_threshold) return std::nullopt;
  const int edit = Levenshtein(surface, query);
  const double query_len = static_cast<double>(DecodeUtf8(query).size());
  if (edit <= params.edit_ratio * query_len) return edit;
  if (static_cast<int>(SplitWords(surface).size()) >= params.min_words &&
      WordDiff(surface, query) <= params.max_word_diff) {
    return edit;
  }
  return std::nullopt;
}

TrigramIndex::TrigramIndex(const SurfaceFormStore& store) : store_(&store) {
  surfaces_ = store.surfaces();
  for (uint32_t id = 0; id < surfaces_.size(); ++id) {
    for (uint64_t t : Trigrams(surfaces_[id])) postings_[t].push_back(id);
  }
}

std::span<const uint32_t> TrigramIndex::Postings(uint64_t trigram) const {
  auto it = postings_.find(trigram);
  if (it == postings_.end()) return {};
  return it->second;
}

std::vector<uint32_t> TrigramIndex::Retrieve(std::string_view query, double threshold) const {
  auto tq = Trigrams(query);
  std::vector<uint32_t> out;
  if (tq.empty()) return out;
  if (threshold <= 0.0) {
    out.resize(surfaces_.size());
    for (uint32_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
  }
  std::unordered_map<uint32_t, int> shared;
  for (uint64_t t : tq) {
    for (uint32_t id : Postings(t)) ++shared[id];
  }
  for (const auto& [id, count] : shared) {
    if (static_cast<double>(count) / static_cast<double>(tq.size()) >= threshold) {
      out.push_back(id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CandidateMatch> GetCandidatesForMention(const TrigramIndex& index,
                                                    std::string_view query,
                                                    const CandGenParams& params) {
  std::map<std::string, CandidateMatch> best;
  if (query.empty()) return {};
  const auto& store = index.store();
  for (uint32_t sid : index.Retrieve(query, params.trigram_threshold)) {
    const std::string& surface = index.surface(sid);
    auto edit = AcceptSurface(query, surface, params);
    if (!edit) continue;
    for (uint32_t rid : store.BySurface(surface)) {
      const auto& rec = store.records()[rid];
      auto it = best.find(rec.entity_id);
      if (it == best.end()) {
        CandidateMatch m;
        m.entity_id = rec.entity_id;
        m.best_sf = surface;
        m.edit_distance = *edit;
        best.emplace(rec.entity_id, std::move(m));
      } else if (*edit < it->second.edit_distance ||
                 (*edit == it->second.edit_distance && surface < it->second.best_sf)) {
        it->second.best_sf = surface;
        it->second.edit_distance = *edit;
      }
    }
  }
  std::vector<CandidateMatch> out;
  out.reserve(best.size());
  for (auto& [id, m] : best) out.push_back(std::move(m));
  return out;
}

std::optional<std::pair<std::string, int>> BestSurfaceFor(const SurfaceFormStore& store,
                                                          std::string_view entity_id,
                                                          std::string_view query) {
  std::optional<std::pair<std::string, int>> best;
  for (uint32_t rid : store.ByEntity(entity_id)) {
    const auto& s = store.records()[rid].surface;
    int edit = Levenshtein(s, query);
    if (!best || edit < best->second || (edit == best->second && s < best->first)) {
      best = std::make_pair(s, edit);
    }
  }
  return best;
}

Cooccurrence Cooccurrence::Load(const std::string& path) {
  Cooccurrence c;
  LineReader reader(path, "cooccurrence");
  std::string line;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() != 3) reader.Error("expected 3 tab-separated columns");
    try {
      c.Add(cols[0], cols[1], ParseInt(cols[2], "count"));
    } catch (const cmt::Error& e) {
      reader.Error(e.what());
    }
  }
  return c;
}

Cooccurrence Cooccurrence::Mine(const std::vector<Document>& docs) {
  std::map<std::pair<std::string, std::string>, int64_t> counts;
  for (const auto& doc : docs) {
    std::set<std::string> ids;
    for (const auto& m : doc.mentions) {
      if (m.gold) ids.insert(*m.gold);
    }
    for (const auto& a : ids) {
      for (const auto& b : ids) {
        if (a != b) ++counts[{a, b}];
      }
    }
  }
  Cooccurrence c;
  for (const auto& [pair, n] : counts) c.Add(pair.first, pair.second, n);
  return c;
}

void Cooccurrence::Add(const std::string& entity, const std::string& neighbor, int64_t count) {
  if (count <= 0) Fail(ErrorCode::kContract, "cooccurrence count must be positive");
  rows_[entity].emplace_back(neighbor, count);
  sorted_ = false;
}

void Cooccurrence::SortRows() const {
  if (sorted_) return;
  for (auto& [id, row] : rows_) {
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
  }
  sorted_ = true;
}

std::vector<std::string> Cooccurrence::Top(std::string_view entity, int r) const {
  SortRows();
  std::vector<std::string> out;
  auto it = rows_.find(std::string(entity));
  if (it == rows_.end()) return out;
  for (const auto& [id, count] : it->second) {
    if (static_cast<int>(out.size()) >= r) break;
    out.push_back(id);
  }
  return out;
}

void Cooccurrence::Write(const std::string& path) const {
  SortRows();
  auto out = OpenArtifact(path, "cooccurrence");
  std::vector<std::string> keys;
  for (const auto& [id, row] : rows_) keys.push_back(id);
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys) {
    for (const auto& [n, count] : rows_.at(k)) out << k << '\t' << n << '\t' << count << '\n';
  }
}

CandidateSets ExpandDocumentCandidates(const CandidateSets& stage1,
                                       const std::vector<std::string>& mention_surfaces,
                                       const Cooccurrence& coocc, const SurfaceFormStore& store,
                                       int top_r) {
  const size_t n = stage1.size();
  CandidateSets out = stage1;
  std::vector<std::unordered_set<std::string>> present(n);
  for (size_t i = 0; i < n; ++i) {
    for (const auto& c : out[i]) present[i].insert(c.entity_id);
  }
  auto add = [&](size_t a, const std::string& entity, Provenance prov) {
    if (present[a].count(entity)) return;
    auto best = BestSurfaceFor(store, entity, mention_surfaces[a]);
    if (!best) return;
    CandidateMatch m;
    m.entity_id = entity;
    m.best_sf = best->first;
    m.edit_distance = best->second;
    m.provenance = prov;
    present[a].insert(entity);
    out[a].push_back(std::move(m));
  };

  // Containment: mention a is completely seen in mention b.
  for (size_t a = 0; a < n; ++a) {
    for (size_t b = 0; b < n; ++b) {
      if (a == b || !ContainsPhrase(mention_surfaces[b], mention_surfaces[a])) continue;
      for (const auto& c : stage1[b]) add(a, c.entity_id, Provenance::kContainment);
    }
  }

  // Cooccurrence, driven by the sets after containment.
  const CandidateSets after_containment = out;
  for (size_t a = 0; a < n; ++a) {
    std::set<std::string> seeds;
    for (size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      for (const auto& c : after_containment[b]) seeds.insert(c.entity_id);
    }
    for (const auto& seed : seeds) {
      for (const auto& neighbor : coocc.Top(seed, top_r)) {
        if (present[a].count(neighbor)) continue;
        bool covers = false;
        for (uint32_t rid : store.ByEntity(neighbor)) {
          if (ContainsPhrase(store.records()[rid].surface, mention_surfaces[a])) {
            covers = true;
            break;
          }
        }
        if (covers) add(a, neighbor, Provenance::kCooccurrence);
      }
    }
  }
  return out;
}

std::unordered_map<std::string, int> CountDocumentOccurrences(const CandidateSets& sets) {
  std::unordered_map<std::string, int> occ;
  for (const auto& set : sets) {
    std::unordered_set<std::string> seen;
    for (const auto& c : set) {
      if (seen.insert(c.entity_id).second) ++occ[c.entity_id];
    }
  }
  return occ;
}

std::vector<CandidateMatch> ScoreAndCut(std::vector<CandidateMatch> candidates,
                                        std::string_view mention_surface,
                                        const std::unordered_map<std::string, int>& doc_occurrences,
                                        const SurfaceFormStore& store, int top_n) {
  for (auto& c : candidates) {
    auto it = doc_occurrences.find(c.entity_id);
    const double occ = it == doc_occurrences.end() ? 0.0 : it->second;
    c.gen_score = static_cast<double>(store.EntityTotal(c.entity_id)) + occ * 100.0 -
                  JaroWinklerDistance(mention_surface, c.best_sf) * 10000.0;
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.gen_score != b.gen_score) return a.gen_score > b.gen_score;
    return a.entity_id < b.entity_id;
  });
  if (top_n >= 0 && static_cast<int>(candidates.size()) > top_n) candidates.resize(top_n);
  return candidates;
}

void FillSurfaceTypes(CandidateMatch* cand, const KnowledgeBase& kb,
                      const SurfaceFormStore& store, const NameLexicons* lexicons) {
  const Entity* e = kb.Find(cand->entity_id);
  if (!e) {
    cand->sf_types.reset();
    return;
  }
  const auto* rec = store.Find(cand->entity_id, cand->best_sf);
  cand->sf_types = SurfaceFormTypes(cand->best_sf, *e, rec ? rec->flags : 0, lexicons);
}

CandidateSets GenerateDocumentCandidates(const Document& doc, const TrigramIndex& index,
                                         const KnowledgeBase& kb, const Cooccurrence& coocc,
                                         const CandGenParams& params,
                                         const NameLexicons* lexicons) {
  CandidateSets stage1;
  std::vector<std::string> surfaces;
  for (const auto& m : doc.mentions) {
    surfaces.push_back(m.surface);
    stage1.push_back(GetCandidatesForMention(index, m.surface, params));
  }
  CandidateSets expanded =
      ExpandDocumentCandidates(stage1, surfaces, coocc, index.store(), params.coocc_top_r);
  const auto occ = CountDocumentOccurrences(expanded);
  for (size_t i = 0; i < expanded.size(); ++i) {
    expanded[i] = ScoreAndCut(std::move(expanded[i]), surfaces[i], occ, index.store(), params.top_n);
    for (auto& c : expanded[i]) FillSurfaceTypes(&c, kb, index.store(), lexicons);
  }
  return expanded;
}

double GoldRecall(const CandidateSets& sets, const std::vector<std::optional<std::string>>& golds,
                  int top_n) {
  if (sets.size() != golds.size()) {
    Fail(ErrorCode::kInvalidArgument, "gold_recall: candidate sets and golds differ in length");
  }
  int total = 0, found = 0;
  for (size_t i = 0; i < sets.size(); ++i) {
    if (!golds[i]) continue;
    ++total;
    const int limit = std::min<int>(top_n, static_cast<int>(sets[i].size()));
    for (int k = 0; k < limit; ++k) {
      if (sets[i][k].entity_id == *golds[i]) {
        ++found;
        break;
      }
    }
  }
  if (total == 0) return 0.0;
  return 100.0 * found / total;
}

void WriteCandidates(const std::string& path, const std::vector<DocumentCandidates>& docs) {
  auto out = OpenArtifact(path, "candidates");
  for (const auto& d : docs) {
    for (size_t i = 0; i < d.sets.size(); ++i) {
      for (const auto& c : d.sets[i]) {
        out << d.doc_id << '\t' << i << '\t' << c.entity_id << '\t' << c.best_sf << '\t'
            << c.edit_distance << '\t' << Fixed6(c.gen_score) << '\t'
            << ProvenanceName(c.provenance) << '\n';
      }
    }
  }
}

std::vector<DocumentCandidates> ReadCandidates(const std::string& path,
                                               const std::vector<Document>& docs) {
  std::unordered_map<std::string, size_t> doc_index;
  std::vector<DocumentCandidates> out(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    doc_index[docs[i].id] = i;
    out[i].doc_id = docs[i].id;
    out[i].sets.resize(docs[i].mentions.size());
  }
  LineReader reader(path, "candidates");
  std::string line;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() != 7) reader.Error("expected 7 tab-separated columns");
    auto it = doc_index.find(cols[0]);
    if (it == doc_index.end()) reader.Error("unknown doc_id '" + cols[0] + "'");
    try {
      auto mi = ParseInt(cols[1], "mention_index");
      auto& sets = out[it->second].sets;
      if (mi < 0 || mi >= static_cast<int64_t>(sets.size())) {
        reader.Error("mention_index out of range for document '" + cols[0] + "'");
      }
      CandidateMatch c;
      c.entity_id = cols[2];
      c.best_sf = cols[3];
      c.edit_distance = static_cast<int>(ParseInt(cols[4], "edit"));
      c.gen_score = ParseDouble(cols[5], "gen_score");
      c.provenance = ParseProvenance(cols[6]);
      sets[mi].push_back(std::move(c));
    } catch (const cmt::Error& e) {
      if (e.code() == ErrorCode::kParse && StartsWith(e.what(), path)) throw;
      reader.Error(e.what());
    }
  }
  return out;
}

}  // namespace cmt

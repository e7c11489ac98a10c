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

// Fuzzy candidate generation over a character-trigram index of surface
// forms, document-level expansion and final scoring.

#ifndef CMTNED_CORE_CANDGEN_HPP_
#define CMTNED_CORE_CANDGEN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core/corpus.hpp"
#include "core/surface_types.hpp"

namespace cmt {

// ---- string metrics (UTF-8 aware, code-point granularity) -----------------

int Levenshtein(std::u32string_view a, std::u32string_view b);
int Levenshtein(std::string_view a, std::string_view b);
// 1 - Jaro-Winkler similarity, prefix scale 0.1, prefix capped at 4.
double JaroWinklerDistance(std::string_view a, std::string_view b);
// Distinct lowercased trigrams of the string padded with one boundary marker
// on each side, as sorted packed keys.
std::vector<uint64_t> Trigrams(std::string_view s);
// |T(query) & T(surface)| / |T(query)|.
double TrigramOverlap(std::string_view query, std::string_view surface);
// Number of distinct words of |a| that do not occur in |b|.
int WordDiff(std::string_view a, std::string_view b);
// True if |needle|'s words occur as a contiguous run of |haystack|'s words.
bool ContainsPhrase(std::string_view haystack, std::string_view needle);

struct CandGenParams {
  double trigram_threshold = 0.60;  // T
  double edit_ratio = 0.25;         // E
  int min_words = 2;                // W
  int max_word_diff = 1;            // D
  int top_n = 100;                  // N
  int coocc_top_r = 20;
};

enum class Provenance { kDirect = 0, kContainment, kCooccurrence };
const char* ProvenanceName(Provenance p);
Provenance ParseProvenance(std::string_view name);

struct CandidateMatch {
  std::string entity_id;
  std::string best_sf;
  int edit_distance = 0;
  SurfaceTypeSet sf_types;
  double gen_score = 0.0;
  Provenance provenance = Provenance::kDirect;
};

// The surface acceptance rule of the first stage. Returns the edit distance
// when |surface| is accepted for |query|.
std::optional<int> AcceptSurface(std::string_view query, std::string_view surface,
                                 const CandGenParams& params);

class TrigramIndex {
 public:
  explicit TrigramIndex(const SurfaceFormStore& store);

  const SurfaceFormStore& store() const { return *store_; }
  size_t num_surfaces() const { return surfaces_.size(); }
  const std::string& surface(uint32_t id) const { return surfaces_[id]; }
  std::span<const uint32_t> Postings(uint64_t trigram) const;
  size_t num_trigrams() const { return postings_.size(); }

  // Surfaces with trigram_overlap(query, surface) >= threshold.
  std::vector<uint32_t> Retrieve(std::string_view query, double threshold) const;

 private:
  const SurfaceFormStore* store_;
  std::vector<std::string> surfaces_;
  std::unordered_map<uint64_t, std::vector<uint32_t>> postings_;
};

// First stage for one mention surface. One match per entity, ordered by id.
std::vector<CandidateMatch> GetCandidatesForMention(const TrigramIndex& index,
                                                    std::string_view query,
                                                    const CandGenParams& params);

// Closest surface of |entity_id| to |query| (min edit, then lexicographic).
std::optional<std::pair<std::string, int>> BestSurfaceFor(const SurfaceFormStore& store,
                                                          std::string_view entity_id,
                                                          std::string_view query);

class Cooccurrence {
 public:
  static Cooccurrence Load(const std::string& path);
  // Counts same-document entity pairs (documents containing both).
  static Cooccurrence Mine(const std::vector<Document>& docs);
  void Add(const std::string& entity, const std::string& neighbor, int64_t count);
  // Most frequent neighbors, count descending then id ascending.
  std::vector<std::string> Top(std::string_view entity, int r) const;
  void Write(const std::string& path) const;
  bool empty() const { return rows_.empty(); }

 private:
  void SortRows() const;
  mutable bool sorted_ = true;
  mutable std::unordered_map<std::string, std::vector<std::pair<std::string, int64_t>>> rows_;
};

using CandidateSets = std::vector<std::vector<CandidateMatch>>;

// Second stage: containment and cooccurrence expansion. Never removes or
// alters an existing candidate.
CandidateSets ExpandDocumentCandidates(const CandidateSets& stage1,
                                       const std::vector<std::string>& mention_surfaces,
                                       const Cooccurrence& coocc, const SurfaceFormStore& store,
                                       int top_r);

// score = entity_frequency + occurrences_in_doc * 100 - jw_distance * 10000,
// sorted descending (ties by entity id) and truncated to |top_n|.
std::vector<CandidateMatch> ScoreAndCut(std::vector<CandidateMatch> candidates,
                                        std::string_view mention_surface,
                                        const std::unordered_map<std::string, int>& doc_occurrences,
                                        const SurfaceFormStore& store, int top_n);

// Number of mentions whose candidate set contains each entity.
std::unordered_map<std::string, int> CountDocumentOccurrences(const CandidateSets& sets);

// Runs both stages and scoring for every mention of |doc|. Fills sf_types
// when |kb| knows the entity.
CandidateSets GenerateDocumentCandidates(const Document& doc, const TrigramIndex& index,
                                         const KnowledgeBase& kb, const Cooccurrence& coocc,
                                         const CandGenParams& params,
                                         const NameLexicons* lexicons);

void FillSurfaceTypes(CandidateMatch* cand, const KnowledgeBase& kb,
                      const SurfaceFormStore& store, const NameLexicons* lexicons);

// Percentage of non-NIL golds found among the first |top_n| candidates.
double GoldRecall(const CandidateSets& sets, const std::vector<std::optional<std::string>>& golds,
                  int top_n);

// Candidate dump: doc_id, mention_index, entity_id, best_sf, edit, gen_score,
// provenance.
struct DocumentCandidates {
  std::string doc_id;
  CandidateSets sets;
};
void WriteCandidates(const std::string& path, const std::vector<DocumentCandidates>& docs);
// Reads a dump, aligning to |docs| (sets sized to each document's mentions).
std::vector<DocumentCandidates> ReadCandidates(const std::string& path,
                                               const std::vector<Document>& docs);

}  // namespace cmt

#endif  // CMTNED_CORE_CANDGEN_HPP_

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

// Ranking features over candidate sets, stage-1 and stage-2 layouts, and the
// feature dump TSV.

#ifndef CMTNED_CORE_FEATURES_HPP_
#define CMTNED_CORE_FEATURES_HPP_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/candgen.hpp"
#include "core/common.hpp"
#include "core/corpus.hpp"
#include "core/embeddings.hpp"

namespace cmt {

// Fixed slot layout. Stage-1 slots, in order:
//   sf_edit_distance, entity_log_freq, sf_type_<T> x11, entity_type_<T> x5,
//   typing_prob_<F> per flavor, avg_sf_edit_distance, max_diff_sf_log_freq,
//   max_diff_doc_sim, max_diff_typing_prob_<F>, max_typing_prob_in_doc_<F>,
//   [doc_sim when raw_doc_sim].
// Stage 2 appends typing_prob_Entity, max_diff_typing_prob_Entity,
// max_typing_prob_in_doc_Entity, max_ranking_score, max_cos_sim_in_context.
class FeatureLayout {
 public:
  // |flavors| are the stage-1 typing flavors; Entity is rejected there.
  FeatureLayout(int stage, std::vector<Flavor> flavors, bool raw_doc_sim = false);
  // Inverse of names(); throws kContract when the names are not a layout.
  static FeatureLayout FromNames(const std::vector<std::string>& names);

  int stage() const { return stage_; }
  const std::vector<Flavor>& flavors() const { return flavors_; }
  // flavors() plus Entity in stage 2.
  std::vector<Flavor> typing_flavors() const;
  bool raw_doc_sim() const { return raw_doc_sim_; }
  const std::vector<std::string>& names() const { return names_; }
  size_t size() const { return names_.size(); }
  // -1 when absent.
  int Slot(std::string_view name) const;

 private:
  int stage_;
  std::vector<Flavor> flavors_;
  bool raw_doc_sim_;
  std::vector<std::string> names_;
};

// Scores attached to one candidate before feature extraction.
struct CandidateScores {
  std::array<std::optional<double>, kNumFlavors> typing;  // P_c^n
  std::optional<double> rank_prob;                         // R_c, stage 2
  double doc_sim = 0.0;                                    // cos(D_c, D_t)
};
using DocumentScores = std::vector<std::vector<CandidateScores>>;  // parallels CandidateSets

struct FeatureOptions {
  int context_top_n = 3;   // N of the top-N x M window
  int context_window = 5;  // M
};

struct FeatureResources {
  const KnowledgeBase* kb = nullptr;               // entity types (optional)
  const SurfaceFormStore* store = nullptr;         // frequencies (required)
  const EmbeddingTable* entity_vectors = nullptr;  // E, stage 2 (optional)
  FeatureOptions options;
};

// max - own for non-max entries; own - second max for the designated max
// (highest value, then lowest id); a singleton gets 0.
std::vector<double> MaxDiff(const std::vector<double>& values, const std::vector<std::string>& ids);

// ln(freq), 0 for freq <= 0.
double LogFreq(int64_t freq);

// Typing probability of |entity| under a flavor's predicted distribution:
// the component of its cluster type, 0 when unclustered or outside classes.
double CandidateTypingProb(const std::vector<double>& probs, const std::vector<int>& class_ids,
                           const Entity* entity, Flavor flavor);

// features[mention][candidate]. Throws kContract on missing scores.
std::vector<std::vector<std::vector<double>>> ComputeFeatures(const FeatureLayout& layout,
                                                              const CandidateSets& sets,
                                                              const DocumentScores& scores,
                                                              const FeatureResources& res);

// One (mention, candidate) row of the dump.
struct FeatureRow {
  std::string doc_id;
  int mention = 0;
  std::string entity_id;
  std::vector<double> values;
  int label = 0;  // 1 = gold
};

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;
};

// Header: doc_id, mention_index, entity_id, slot names, label; values Fixed6.
void WriteFeatureTable(const std::string& path, const FeatureTable& table);
FeatureTable ReadFeatureTable(const std::string& path);

// Consecutive row ranges sharing (doc_id, mention).
std::vector<std::pair<size_t, size_t>> MentionGroups(const FeatureTable& table);

}  // namespace cmt

#endif  // CMTNED_CORE_FEATURES_HPP_

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

// Entity clusterings (K-means over embeddings, Brown over entity streams),
// cluster-type assignment, AGCCS and the combination penalty.

#ifndef CMTNED_CORE_CLUSTERING_HPP_
#define CMTNED_CORE_CLUSTERING_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/common.hpp"
#include "core/corpus.hpp"
#include "core/embeddings.hpp"

namespace cmt {

struct Clustering {
  Flavor flavor = Flavor::kWord;
  int k = 0;
  std::map<std::string, int> assignment;

  std::optional<int> Lookup(std::string_view id) const;
  // Throws kContract if an id is out of [0, k) or nothing is assigned.
  void Validate() const;
};

// TSV "token \t cluster" after a "#flavor k" line.
void WriteClustering(const std::string& path, const Clustering& c);
Clustering ReadClustering(const std::string& path);

struct KMeansOptions {
  int k = 2;
  uint64_t seed = 1;
  int max_iterations = 50;
  double stop_fraction = 0.01;  // stop when at most this fraction moved
  int threads = 1;
  // Independent k-means++ starts; the lowest final inertia wins.
  int restarts = 3;
};

struct KMeansIteration {
  int iteration = 0;
  double inertia = 0.0;  // after the assignment step
  double changed_fraction = 0.0;
  int reseeded = 0;
};

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  std::vector<KMeansIteration> log;
  double inertia = 0.0;
};

// Lloyd iterations from k-means++ seeding. |log| belongs to the winning start.
KMeansResult KMeans(const std::vector<std::vector<double>>& points, const KMeansOptions& options);

// Clusters the rows of |table|, restricted to |keep| when non-empty.
Clustering KMeansCluster(const EmbeddingTable& table, Flavor flavor, const KMeansOptions& options,
                         const std::vector<std::string>& keep, KMeansResult* details);

// One merge of the exchange algorithm: active clusters (token lists) before
// the merge and the pair merged.
struct BrownMerge {
  std::vector<std::vector<std::string>> clusters;
  int a = 0;
  int b = 0;
};

// Seeds k clusters with the most frequent tokens, then adds tokens by
// frequency, each time merging the pair that loses the least average mutual
// information of adjacent-cluster bigrams. Streams never join across
// documents. |trace| receives every merge when non-null.
Clustering BrownCluster(const std::vector<std::vector<std::string>>& streams, int k,
                        std::vector<BrownMerge>* trace);

// AMI of adjacent-cluster bigrams restricted to tokens in |cluster_of|.
double AverageMutualInformation(const std::vector<std::vector<std::string>>& streams,
                                const std::map<std::string, int>& cluster_of);

void AssignTypes(const Clustering& clustering, KnowledgeBase* kb);

struct GoldCandidates {
  std::vector<std::string> candidates;
  std::string gold;
};

// Mean size of the cluster-type group holding the gold. Mentions whose gold
// is missing from the set or unclustered are skipped; throws if none remain.
double Agccs(const Clustering& clustering, const std::vector<GoldCandidates>& mentions,
             int* eligible);

// P_c^t for one clustering variant: probs[m][c] for candidate c of mention m.
struct VariantProbs {
  std::string name;
  Flavor flavor = Flavor::kWord;
  std::vector<std::vector<std::optional<double>>> probs;
};

// Sum over mentions and non-gold candidates of max(0, P_ng - P_g).
double ConfusionPenalty(const VariantProbs& variant, const std::vector<GoldCandidates>& mentions);

struct CombinationScore {
  std::vector<std::string> combo;  // variant names, Word/Surface/Synset/Brown
  double penalty = 0.0;
};

// Every combination of one variant per flavor present, ascending by penalty
// (ties by names), truncated to |top|. Entity variants are rejected.
std::vector<CombinationScore> SelectCombinations(const std::vector<VariantProbs>& variants,
                                                 const std::vector<GoldCandidates>& mentions,
                                                 int top);

}  // namespace cmt

#endif  // CMTNED_CORE_CLUSTERING_HPP_

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

// Feedforward candidate classifier (in -> 500 -> 300 -> 2, ReLU, softmax),
// its training loop, candidate ranking, thresholding, and the two-stage
// ranking pipeline.

#ifndef CMTNED_CORE_RANKER_HPP_
#define CMTNED_CORE_RANKER_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/candgen.hpp"
#include "core/contexts.hpp"
#include "core/embeddings.hpp"
#include "core/eval.hpp"
#include "core/features.hpp"
#include "core/nn.hpp"
#include "core/typing.hpp"

namespace cmt {

inline constexpr double kDefaultThreshold = 0.03;

struct RankerConfig {
  std::vector<std::string> feature_names;  // input layout
  std::vector<int> hidden = {500, 300};
  std::vector<double> dropout = {0.1, 0.7};  // after each hidden layer
  int stage = 1;
};

struct RankerHyperparams {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double clip_norm = 0.0;
  int batch_size = 400;
  int epochs = 20;
  int patience = 5;  // epochs without dev F1 improvement; 0 disables
  uint64_t seed = 1;
  // Optional class balancing: keep at most |negatives_per_mention| random
  // negatives per mention. 0 keeps all (the default).
  int negatives_per_mention = 0;
};

struct RankerEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;  // mention-level top-1 micro F1
};

class RankerModel {
 public:
  RankerModel(const RankerConfig& config, uint64_t seed);

  const RankerConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  size_t input_size() const { return config_.feature_names.size(); }

  // Input standardization (x - mean) / scale, fitted on training rows.
  void FitStandardization(const std::vector<const std::vector<double>*>& rows);
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }

  // Probability of the true class; dropout off.
  double TrueProb(std::span<const double> x) const;

  // Mean cross-entropy of |rows| with 0/1 |labels|; gradients accumulate
  // into params() when |grad|. Dropout applies when |rng| is non-null.
  double Loss(const std::vector<const std::vector<double>*>& rows, const std::vector<int>& labels,
              bool grad, std::mt19937_64* rng);

  void Save(const std::string& path) const;
  static std::unique_ptr<RankerModel> Load(const std::string& path);

 private:
  struct Cache {
    std::vector<nn::Vec> acts;   // input (standardized), then each hidden output
    std::vector<nn::Vec> masks;  // dropout masks per hidden layer
    nn::Vec probs;
  };
  void Forward(std::span<const double> x, std::mt19937_64* rng, Cache* cache) const;

  RankerConfig config_;
  nn::ParamStore params_;
  std::vector<nn::Tensor> weights_, biases_;
  std::vector<double> mean_, scale_;
};

std::vector<RankerEpoch> TrainRanker(RankerModel* model, const FeatureTable& train,
                                     const FeatureTable* dev, const RankerHyperparams& hp);

struct RankedCandidate {
  size_t index = 0;  // position in the input
  double prob = 0.0;
};

// Descending by true-class probability, ties by entity id.
std::vector<RankedCandidate> RankCandidates(const RankerModel& model,
                                            const std::vector<std::vector<double>>& features,
                                            const std::vector<std::string>& entity_ids);

// Abstains (entity cleared) when the top score is below |threshold|;
// threshold 0 never abstains.
Prediction ApplyThreshold(Prediction p, double threshold);

// Mention-level top-1 accuracy over feature-table groups.
double TopOneAccuracy(const RankerModel& model, const FeatureTable& table);

// cos(D_c, D_t) between a candidate's pseudo-document (the reference-corpus
// sentences that mention it) and the test document, both embedded with
// DocEmbedding. A document that is itself part of the reference corpus is
// left out of its candidates' pseudo-documents. Empty sides give 0.
class DocSimilarity {
 public:
  DocSimilarity(const std::vector<Document>& reference, const EmbeddingTable& words);

  std::vector<std::vector<double>> Compute(const Document& doc, const CandidateSets& sets) const;
  double Similarity(const Document& doc, std::string_view entity_id) const;

 private:
  struct Sentence {
    std::string doc_id;
    std::vector<std::string> tokens;
  };
  const EmbeddingTable* words_;
  IdfTable idf_;
  std::unordered_map<std::string, std::vector<Sentence>> sentences_;
};

// Everything the pipeline reads besides the ranker models.
struct RankingResources {
  const KnowledgeBase* kb = nullptr;  // must carry cluster types
  const SurfaceFormStore* store = nullptr;
  const EmbeddingTable* entity_vectors = nullptr;
  FeatureOptions options;
  std::vector<Flavor> stage1_flavors;  // typing flavors of stage 1
  std::array<const TypingModel*, kNumFlavors> typing{};  // per flavor; Entity for stage 2
  bool raw_doc_sim = false;
};

// Typing probabilities of every candidate for |flavors|. Entity windows are
// built from |ec_entities| (required when Entity is requested).
void FillTypingScores(const Document& doc, const CandidateSets& sets,
                      const std::vector<Flavor>& flavors, const RankingResources& res,
                      const MentionEntities* ec_entities, DocumentScores* scores);

// Scores with typing probabilities of the stage-1 flavors and doc sims.
DocumentScores Stage1Scores(const Document& doc, const CandidateSets& sets,
                            const std::vector<std::vector<double>>& doc_sims,
                            const RankingResources& res);

struct DocumentRanking {
  DocumentScores scores;  // rank_prob holds the stage-1 R after stage 1
  std::vector<std::vector<std::vector<double>>> stage1_features, stage2_features;
  std::vector<std::vector<double>> stage1_probs, stage2_probs;
  MentionEntities stage1_top;  // EC window entities
  std::vector<Prediction> stage1_predictions, predictions;  // thresholded
};

// Stage 1 always runs; stage 2 runs when |stage2| is non-null and needs the
// Entity typing model. Without a stage-1 model the ranking stops after the
// stage-1 features (used to build training tables); |stage2_features| builds
// the stage-2 features without a stage-2 model.
DocumentRanking RankDocument(const Document& doc, const CandidateSets& sets,
                             const std::vector<std::vector<double>>& doc_sims,
                             const RankingResources& res, const RankerModel* stage1,
                             const RankerModel* stage2, double threshold,
                             bool stage2_features = false);

// Appends one document's feature rows (labels from gold) to |table|.
void AppendFeatureRows(const Document& doc, const CandidateSets& sets,
                       const std::vector<std::vector<std::vector<double>>>& features,
                       FeatureTable* table);

}  // namespace cmt

#endif  // CMTNED_CORE_RANKER_HPP_

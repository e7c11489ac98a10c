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

// Mention typing: left / surface / surface2 / right channels, each encoded
// (mean-pool or LSTM), concatenated, softmax over cluster-based types.

#ifndef CMTNED_CORE_TYPING_HPP_
#define CMTNED_CORE_TYPING_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/common.hpp"
#include "core/contexts.hpp"
#include "core/embeddings.hpp"
#include "core/nn.hpp"

namespace cmt {

enum class EncoderKind { kMean, kRecurrent };
const char* EncoderKindName(EncoderKind k);
// Accepts "mean" and "recurrent"/"lstm"; "cnn" and others are rejected.
EncoderKind ParseEncoderKind(std::string_view name);

struct TypingConfig {
  Flavor flavor = Flavor::kSurface;
  int num_classes = 2;
  EncoderKind encoder = EncoderKind::kRecurrent;
  int hidden = 600;
  double dropout = 0.5;
  bool surface2 = true;  // W_SF channel
  int max_tokens = 50;   // per side
  int emb_dim = 50;      // for banks built without a pretrained table

  ContextFormat format() const { return FormatForFlavor(flavor); }
};

// Pretrained tables for the banks; any may be null, in which case the bank
// vocabulary comes from |vocab_source| and vectors are random.
struct TypingTables {
  const EmbeddingTable* context = nullptr;   // left/right
  const EmbeddingTable* surface = nullptr;   // W_CC
  const EmbeddingTable* surface2 = nullptr;  // W_SF
  const std::vector<TypingInstance>* vocab_source = nullptr;
};

struct TypingHyperparams {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1.2e-6;
  double clip_norm = 2.0;
  int batch_size = 200;
  int epochs = 20;
  int patience = 3;  // epochs without dev-loss improvement; 0 disables
  uint64_t seed = 1;
};

struct TypingEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_micro_f1 = 0.0;
};

struct TypingEval {
  double micro_f1 = 0.0;
  double avg_loss = 0.0;
};

class TypingModel {
 public:
  // Throws on bad config or table dims.
  TypingModel(const TypingConfig& config, const TypingTables& tables, uint64_t seed);
  ~TypingModel();
  TypingModel(const TypingModel&) = delete;
  TypingModel& operator=(const TypingModel&) = delete;

  const TypingConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  // class index -> cluster id
  const std::vector<int>& class_ids() const { return class_ids_; }
  int ClassIndex(int cluster) const;

  // Distribution over classes; dropout off. The window format must match.
  std::vector<double> Predict(const ContextWindow& window) const;

  // Mean cross-entropy over |batch|; gradients are accumulated into params()
  // when |grad| is set. Dropout applies when |rng| is non-null.
  double Loss(const std::vector<const TypingInstance*>& batch, bool grad,
              std::mt19937_64* rng);

  void Save(const std::string& path) const;
  static std::unique_ptr<TypingModel> Load(const std::string& path);

 private:
  struct Bank;
  struct Channel;
  struct Forward;
  TypingModel();
  void Build(uint64_t seed, const TypingTables& tables);
  int AddBank(const std::string& name, const EmbeddingTable* table,
              const std::vector<std::vector<std::string>>& vocab);
  double RunForward(const ContextWindow& w, std::mt19937_64* rng, Forward* fw) const;
  void RunBackward(const Forward& fw, int target, double scale);

  TypingConfig config_;
  nn::ParamStore params_;
  std::vector<int> class_ids_;
  std::vector<std::unique_ptr<Bank>> banks_;
  std::vector<std::unique_ptr<Channel>> channels_;
  nn::Tensor out_w_, out_b_;
  int concat_width_ = 0;
};

std::vector<TypingEpoch> TrainTyping(TypingModel* model, const std::vector<TypingInstance>& train,
                                     const std::vector<TypingInstance>& dev,
                                     const TypingHyperparams& hp);

TypingEval EvaluateTyping(const TypingModel& model, const std::vector<TypingInstance>& data);

}  // namespace cmt

#endif  // CMTNED_CORE_TYPING_HPP_

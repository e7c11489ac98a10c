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

// Skip-gram with negative sampling over token streams (window mode) or
// explicit (target, context) pairs, plus cosine and document vectors.

#ifndef CMTNED_CORE_EMBEDDINGS_HPP_
#define CMTNED_CORE_EMBEDDINGS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cmt {

struct EmbeddingMeta {
  std::string mode = "window";  // window | pair
  int window = 0;
  int epochs = 0;
  uint64_t seed = 0;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Appends a token; throws on duplicates or a wrong length.
  void Add(const std::string& token, std::span<const double> values);
  std::optional<size_t> Index(std::string_view token) const;
  std::span<const double> Row(size_t i) const {
    return {data_.data() + i * dim_, static_cast<size_t>(dim_)};
  }
  std::span<double> MutableRow(size_t i) {
    return {data_.data() + i * dim_, static_cast<size_t>(dim_)};
  }
  // Empty span when |token| is unknown.
  std::span<const double> Lookup(std::string_view token) const;

  EmbeddingMeta meta;

 private:
  int dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, size_t> index_;
};

void WriteEmbeddings(const std::string& path, const EmbeddingTable& table);
EmbeddingTable ReadEmbeddings(const std::string& path);

struct SgnsOptions {
  int dim = 300;
  int window = 2;
  int negatives = 5;
  int epochs = 5;
  int min_count = 1;
  double learning_rate = 0.025;
  uint64_t seed = 1;
  // threads > 1 with deterministic == false trains lock-free shards.
  int threads = 1;
  bool deterministic = true;
  // Pairs in the frozen sample used for the per-epoch loss.
  int loss_sample = 2000;
};

struct SgnsResult {
  EmbeddingTable targets;
  EmbeddingTable contexts;
  // Mean negative log-likelihood on a frozen sample, after each epoch.
  std::vector<double> epoch_loss;
};

// (center, context) positions within |window| on one stream.
std::vector<std::pair<size_t, size_t>> WindowPairs(size_t length, int window);

SgnsResult TrainWindowSgns(const std::vector<std::vector<std::string>>& streams,
                           const SgnsOptions& options);
SgnsResult TrainPairSgns(const std::vector<std::pair<std::string, std::string>>& pairs,
                         const SgnsOptions& options);

// One SGNS example: -log s(w.c) - sum log s(-w.n). Gradients are written
// into the given buffers (same shapes as the inputs) when non-null.
double SgnsLoss(std::span<const double> w, std::span<const double> c,
                const std::vector<std::span<const double>>& negatives,
                std::vector<double>* grad_w, std::vector<double>* grad_c,
                std::vector<std::vector<double>>* grad_negatives);

// Throws kInvalidArgument on mismatched dims or a zero vector.
double Cosine(std::span<const double> a, std::span<const double> b);

// Smoothed inverse document frequency over a document collection.
class IdfTable {
 public:
  static IdfTable Build(const std::vector<std::vector<std::string>>& docs);
  double Idf(std::string_view token) const;
  size_t num_docs() const { return num_docs_; }

 private:
  size_t num_docs_ = 0;
  std::unordered_map<std::string, size_t> df_;
};

struct DocVector {
  std::vector<double> values;
  bool empty = true;  // no in-vocabulary token
};

// idf-weighted mean of in-vocabulary vectors, L2-normalized.
DocVector DocEmbedding(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                       const IdfTable& idf);

}  // namespace cmt

#endif  // CMTNED_CORE_EMBEDDINGS_HPP_

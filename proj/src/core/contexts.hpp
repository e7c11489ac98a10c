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

// Mention context windows (WC/SFC/EC), embedding training inputs and the
// distant-supervision typing datasets.

#ifndef CMTNED_CORE_CONTEXTS_HPP_
#define CMTNED_CORE_CONTEXTS_HPP_

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "core/clustering.hpp"
#include "core/common.hpp"
#include "core/corpus.hpp"

namespace cmt {

inline constexpr int kContextMentions = 10;

struct ContextWindow {
  std::vector<std::string> left;
  std::vector<std::string> surface;
  std::vector<std::string> right;
  ContextFormat format = ContextFormat::kWC;
};

// Entity ids to use for EC windows, one per mention; defaults to the golds.
using MentionEntities = std::vector<std::optional<std::string>>;

// |entities| overrides the gold ids for EC windows (e.g. stage-1 top-1).
ContextWindow ExtractContext(const Document& doc, int mention, ContextFormat format,
                             const MentionEntities* entities = nullptr);

using TokenStreams = std::vector<std::vector<std::string>>;
using TokenPairs = std::vector<std::pair<std::string, std::string>>;

// Per document: words with every non-NIL mention replaced by its id.
TokenStreams BuildWcStream(const std::vector<Document>& docs);
// Per document: the ordered non-NIL mention ids.
TokenStreams BuildEcStream(const std::vector<Document>& docs);
// (entity, word) for every word of up to 10 neighbouring mention surfaces
// on each side.
TokenPairs BuildSfcPairs(const std::vector<Document>& docs);
// (entity, synset) for every retained synset not in |filter|.
TokenPairs BuildSynsetPairs(const KnowledgeBase& kb, const std::set<std::string>& filter);

std::string ClusterToken(int cluster);
// Per document: mentions of clustered entities are followed by their
// cluster token; entity ids never appear.
TokenStreams BuildClusterCentricStream(const std::vector<Document>& docs,
                                       const Clustering& clustering);
// (word, cluster token), max(1, round(ln f)) copies per surface word.
TokenPairs BuildSfWordPairs(const SurfaceFormStore& store, const Clustering& clustering);
int SfCopies(int64_t frequency);

struct TypingInstance {
  ContextWindow context;
  int label = -1;  // -1 when unlabeled
  std::string entity_id;
  std::string key;  // doc_id:mention_index
};

struct DatasetFilters {
  int min_sentence_words = 10;
  int max_sentence_words = 50;
};

struct DatasetStats {
  int instances = 0;
  int skipped_nil = 0;
  int skipped_unclustered = 0;
  int skipped_sentence = 0;  // WC sentence filter
};

std::vector<TypingInstance> BuildTypingDataset(const std::vector<Document>& docs,
                                               const Clustering& clustering, ContextFormat format,
                                               const DatasetFilters& filters, DatasetStats* stats);

// Unlabeled windows for every mention, for prediction.
std::vector<TypingInstance> BuildInferenceWindows(const std::vector<Document>& docs,
                                                  ContextFormat format,
                                                  const std::vector<MentionEntities>* entities);

// TSV: label \t entity_id \t left|surface|right [\t key], after a "#format"
// line. Unlabeled rows carry "?".
void WriteTypingDataset(const std::string& path, ContextFormat format,
                        const std::vector<TypingInstance>& data);
std::vector<TypingInstance> ReadTypingDataset(const std::string& path, ContextFormat* format);

void WriteStreams(const std::string& path, const TokenStreams& streams);
TokenStreams ReadStreams(const std::string& path);
void WritePairs(const std::string& path, const TokenPairs& pairs);
TokenPairs ReadPairs(const std::string& path);

}  // namespace cmt

#endif  // CMTNED_CORE_CONTEXTS_HPP_

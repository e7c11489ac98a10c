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

// Deterministic synthetic mini-KB and corpus with context-disambiguable
// homonyms: every ambiguous surface names one entity in each of several
// topics, and documents draw their words from a single topic.

#ifndef CMTNED_CORE_SYNTH_HPP_
#define CMTNED_CORE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace cmt {

struct SynthOptions {
  uint64_t seed = 1;
  int topics = 5;
  int ambiguous_surfaces = 10;
  int senses = 3;        // entities per ambiguous surface, in distinct topics
  int unambiguous = 20;  // single-surface entities, spread over topics
  int train_docs = 200;
  int test_docs = 50;
  int topic_words = 40;        // vocabulary per topic
  int sentences_per_doc = 4;
  double off_topic_rate = 0.1;  // share of words drawn from another topic
};

struct SynthFixture {
  KnowledgeBase kb;
  TypeMapping types;
  std::vector<std::pair<std::string, CoarseType>> type_rows;  // for the mapping file
  SurfaceFormStore store;
  std::vector<Document> train, test;
  std::vector<int> entity_topic;  // parallel to kb.entities()
};

SynthFixture GenerateSynthFixture(const SynthOptions& options);

// Writes kb.tsv, types.tsv, surface_forms.tsv, train.corpus and test.corpus
// into |dir| (created if missing).
void WriteSynthFixture(const std::string& dir, const SynthFixture& fixture);

}  // namespace cmt

#endif  // CMTNED_CORE_SYNTH_HPP_

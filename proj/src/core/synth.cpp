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

#include "core/synth.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "core/common.hpp"

namespace cmt {

namespace {

constexpr const char* kFunctionWords[] = {"the", "of",  "and",  "in",   "a",    "to",   "was",
                                          "on",  "for", "with", "from", "by",   "at",   "its",
                                          "has", "new", "near", "also", "that", "which"};

constexpr const char* kSynsets[] = {"synth_person", "synth_organization", "synth_location",
                                    "synth_team", "synth_other"};

class Namer {
 public:
  explicit Namer(std::mt19937_64* rng) : rng_(rng) {}

  // Unique lowercase pseudo-word of |syllables| consonant-vowel pairs.
  std::string Word(int syllables) {
    static constexpr char kCons[] = "bdfgklmnprstvz";
    static constexpr char kVow[] = "aeiou";
    for (;;) {
      std::string w;
      for (int i = 0; i < syllables; ++i) {
        w += kCons[(*rng_)() % (sizeof(kCons) - 1)];
        w += kVow[(*rng_)() % (sizeof(kVow) - 1)];
      }
      if ((*rng_)() % 2) w += kCons[(*rng_)() % (sizeof(kCons) - 1)];
      if (used_.insert(w).second) return w;
    }
  }
  std::string Name(int syllables) {
    std::string w = Word(syllables);
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
  }

 private:
  std::mt19937_64* rng_;
  std::set<std::string> used_;
};

struct EntitySpec {
  std::string id;
  int topic = 0;
  std::vector<std::string> surfaces;  // mention renderings
  std::vector<double> weights;        // how often each rendering is used
};

int Uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

SynthFixture GenerateSynthFixture(const SynthOptions& o) {
  if (o.topics < 2 || o.senses < 1 || o.senses > o.topics || o.ambiguous_surfaces < 0 ||
      o.unambiguous < 0 || o.train_docs < 1 || o.test_docs < 0 || o.topic_words < 1 ||
      o.sentences_per_doc < 1 || o.off_topic_rate < 0 || o.off_topic_rate > 1) {
    Fail(ErrorCode::kInvalidArgument, "invalid synthetic fixture options");
  }
  std::mt19937_64 rng(o.seed);
  Namer namer(&rng);
  SynthFixture fx;

  std::vector<std::string> qualifiers;
  std::vector<std::vector<std::string>> vocab(o.topics);
  for (int t = 0; t < o.topics; ++t) {
    qualifiers.push_back(namer.Name(2));
    for (int i = 0; i < o.topic_words; ++i) vocab[t].push_back(namer.Word(2));
  }

  std::vector<EntitySpec> specs;
  for (int j = 0; j < o.ambiguous_surfaces; ++j) {
    const std::string name = namer.Name(3);
    for (int s = 0; s < o.senses; ++s) {
      EntitySpec e;
      e.topic = (j + s) % o.topics;
      e.id = name + "_(" + qualifiers[e.topic] + ")";
      e.surfaces = {name, name + " " + qualifiers[e.topic]};
      e.weights = {0.85, 0.15};
      specs.push_back(e);
    }
  }
  for (int u = 0; u < o.unambiguous; ++u) {
    EntitySpec e;
    e.topic = u % o.topics;
    std::string first = namer.Name(2), last = namer.Name(3);
    e.id = first + "_" + last;
    e.surfaces = {first + " " + last, last};
    e.weights = {0.7, 0.3};
    specs.push_back(e);
  }

  for (int c = 0; c < kNumCoarseTypes - 1; ++c) {
    fx.type_rows.push_back({kSynsets[c], static_cast<CoarseType>(c)});
    fx.types.Set(kSynsets[c], static_cast<CoarseType>(c));
  }
  std::vector<std::vector<size_t>> by_topic(o.topics);
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    Entity e;
    e.id = s.id;
    int type = Uniform(rng, 0, kNumCoarseTypes - 1);
    e.synsets = {kSynsets[type]};
    e.coarse_type = static_cast<CoarseType>(type);
    // Primary surfaces carry comparable priors so frequency alone never
    // decides between senses.
    int64_t f0 = Uniform(rng, 40, 120), f1 = Uniform(rng, 5, 30);
    fx.store.Add({s.id, s.surfaces[0], f0, 0});
    fx.store.Add({s.id, s.surfaces[1], f1, 0});
    e.frequency = f0 + f1;
    fx.kb.Add(e);
    fx.entity_topic.push_back(s.topic);
    by_topic[s.topic].push_back(i);
  }

  auto make_doc = [&](const std::string& id) {
    Document d;
    d.id = id;
    const int topic = Uniform(rng, 0, o.topics - 1);
    std::bernoulli_distribution off(o.off_topic_rate), function_word(0.35);
    for (int s = 0; s < o.sentences_per_doc; ++s) {
      std::vector<std::string> words;
      const int n = Uniform(rng, 10, 16);
      for (int w = 0; w < n; ++w) {
        if (function_word(rng)) {
          words.push_back(kFunctionWords[rng() % std::size(kFunctionWords)]);
        } else {
          int t = topic;
          if (off(rng)) t = (topic + Uniform(rng, 1, o.topics - 1)) % o.topics;
          words.push_back(vocab[t][rng() % vocab[t].size()]);
        }
      }
      // One or two mentions at distinct word gaps.
      std::set<int> gaps;
      const int mentions = by_topic[topic].empty() ? 0 : Uniform(rng, 1, 2);
      while (static_cast<int>(gaps.size()) < mentions) gaps.insert(Uniform(rng, 0, n));
      std::vector<std::string> tokens;
      const int sentence = static_cast<int>(d.sentences.size());
      for (int w = 0; w <= n; ++w) {
        if (gaps.count(w)) {
          const auto& chosen = specs[by_topic[topic][rng() % by_topic[topic].size()]];
          std::discrete_distribution<int> pick(chosen.weights.begin(), chosen.weights.end());
          const std::string& surface = chosen.surfaces[pick(rng)];
          Mention m;
          m.sentence = sentence;
          m.start = static_cast<int>(tokens.size());
          for (const auto& t : SplitWords(surface)) tokens.push_back(t);
          m.end = static_cast<int>(tokens.size());
          m.surface = surface;
          m.gold = chosen.id;
          d.mentions.push_back(m);
        }
        if (w < n) tokens.push_back(words[w]);
      }
      d.sentences.push_back(std::move(tokens));
    }
    ValidateDocument(d);
    return d;
  };
  char buf[32];
  for (int i = 0; i < o.train_docs; ++i) {
    std::snprintf(buf, sizeof(buf), "train_%04d", i);
    fx.train.push_back(make_doc(buf));
  }
  for (int i = 0; i < o.test_docs; ++i) {
    std::snprintf(buf, sizeof(buf), "test_%04d", i);
    fx.test.push_back(make_doc(buf));
  }
  return fx;
}

void WriteSynthFixture(const std::string& dir, const SynthFixture& fx) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create '" + dir + "': " + ec.message());
  WriteKb(dir + "/kb.tsv", fx.kb);
  {
    auto out = OpenArtifact(dir + "/types.tsv", "types");
    for (const auto& [synset, type] : fx.type_rows) out << synset << '\t' << CoarseTypeName(type) << '\n';
    if (!out) Fail(ErrorCode::kIo, "write failed for '" + dir + "/types.tsv'");
  }
  WriteSurfaceForms(dir + "/surface_forms.tsv", fx.store);
  WriteCorpus(dir + "/train.corpus", fx.train);
  WriteCorpus(dir + "/test.corpus", fx.test);
}

}  // namespace cmt

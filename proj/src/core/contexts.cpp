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

#include "core/contexts.hpp"

#include <algorithm>
#include <cmath>

namespace cmt {

namespace {

const std::optional<std::string>& EntityOf(const Document& doc, int m,
                                           const MentionEntities* entities) {
  return entities ? (*entities)[m] : doc.mentions[m].gold;
}

std::string JoinTokens(const std::vector<std::string>& toks) { return Join(toks, " "); }

}  // namespace

ContextWindow ExtractContext(const Document& doc, int mention, ContextFormat format,
                             const MentionEntities* entities) {
  if (mention < 0 || mention >= static_cast<int>(doc.mentions.size())) {
    Fail(ErrorCode::kInvalidArgument, "mention " + std::to_string(mention) + " not in document '" +
                                          doc.id + "'");
  }
  if (entities && entities->size() != doc.mentions.size()) {
    Fail(ErrorCode::kContract, "entity override size differs from mention count in '" + doc.id +
                                   "'");
  }
  const Mention& m = doc.mentions[mention];
  ContextWindow w;
  w.format = format;
  w.surface = doc.MentionTokens(m);
  const int n = static_cast<int>(doc.mentions.size());
  const int lo = std::max(0, mention - kContextMentions);
  const int hi = std::min(n - 1, mention + kContextMentions);
  switch (format) {
    case ContextFormat::kWC: {
      const auto& sent = doc.sentences[m.sentence];
      w.left.assign(sent.begin(), sent.begin() + m.start);
      w.right.assign(sent.begin() + m.end, sent.end());
      break;
    }
    case ContextFormat::kSFC: {
      for (int j = lo; j < mention; ++j) {
        for (auto& t : doc.MentionTokens(doc.mentions[j])) w.left.push_back(std::move(t));
      }
      for (int j = mention + 1; j <= hi; ++j) {
        for (auto& t : doc.MentionTokens(doc.mentions[j])) w.right.push_back(std::move(t));
      }
      break;
    }
    case ContextFormat::kEC: {
      for (int j = lo; j < mention; ++j) {
        if (const auto& e = EntityOf(doc, j, entities)) w.left.push_back(*e);
      }
      for (int j = mention + 1; j <= hi; ++j) {
        if (const auto& e = EntityOf(doc, j, entities)) w.right.push_back(*e);
      }
      break;
    }
  }
  return w;
}

TokenStreams BuildWcStream(const std::vector<Document>& docs) {
  TokenStreams out;
  for (const auto& doc : docs) {
    std::vector<std::string> stream;
    size_t next = 0;
    for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
      const auto& sent = doc.sentences[s];
      for (int t = 0; t < static_cast<int>(sent.size());) {
        if (next < doc.mentions.size() && doc.mentions[next].sentence == s &&
            doc.mentions[next].start == t) {
          const Mention& m = doc.mentions[next++];
          if (m.gold) {
            stream.push_back(*m.gold);
          } else {
            stream.insert(stream.end(), sent.begin() + m.start, sent.begin() + m.end);
          }
          t = m.end;
        } else {
          stream.push_back(sent[t++]);
        }
      }
    }
    out.push_back(std::move(stream));
  }
  return out;
}

TokenStreams BuildEcStream(const std::vector<Document>& docs) {
  TokenStreams out;
  for (const auto& doc : docs) {
    std::vector<std::string> stream;
    for (const auto& m : doc.mentions) {
      if (m.gold) stream.push_back(*m.gold);
    }
    out.push_back(std::move(stream));
  }
  return out;
}

TokenPairs BuildSfcPairs(const std::vector<Document>& docs) {
  TokenPairs out;
  for (const auto& doc : docs) {
    for (int i = 0; i < static_cast<int>(doc.mentions.size()); ++i) {
      const auto& gold = doc.mentions[i].gold;
      if (!gold) continue;
      ContextWindow w = ExtractContext(doc, i, ContextFormat::kSFC);
      for (const auto& t : w.left) out.emplace_back(*gold, t);
      for (const auto& t : w.right) out.emplace_back(*gold, t);
    }
  }
  return out;
}

TokenPairs BuildSynsetPairs(const KnowledgeBase& kb, const std::set<std::string>& filter) {
  TokenPairs out;
  for (const auto& e : kb.entities()) {
    for (const auto& s : e.synsets) {
      if (!filter.count(s)) out.emplace_back(e.id, s);
    }
  }
  return out;
}

std::string ClusterToken(int cluster) {
  return "\xE2\x9F\xA8" "CLUSTER_" + std::to_string(cluster) + "\xE2\x9F\xA9";
}

TokenStreams BuildClusterCentricStream(const std::vector<Document>& docs,
                                       const Clustering& clustering) {
  TokenStreams out;
  for (const auto& doc : docs) {
    std::vector<std::string> stream;
    size_t next = 0;
    for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
      const auto& sent = doc.sentences[s];
      for (int t = 0; t < static_cast<int>(sent.size());) {
        if (next < doc.mentions.size() && doc.mentions[next].sentence == s &&
            doc.mentions[next].start == t) {
          const Mention& m = doc.mentions[next++];
          stream.insert(stream.end(), sent.begin() + m.start, sent.begin() + m.end);
          if (m.gold) {
            if (auto c = clustering.Lookup(*m.gold)) stream.push_back(ClusterToken(*c));
          }
          t = m.end;
        } else {
          stream.push_back(sent[t++]);
        }
      }
    }
    out.push_back(std::move(stream));
  }
  return out;
}

int SfCopies(int64_t frequency) {
  if (frequency <= 1) return 1;
  return std::max(1, static_cast<int>(std::lround(std::log(static_cast<double>(frequency)))));
}

TokenPairs BuildSfWordPairs(const SurfaceFormStore& store, const Clustering& clustering) {
  TokenPairs out;
  for (const auto& r : store.records()) {
    auto c = clustering.Lookup(r.entity_id);
    if (!c) continue;
    const std::string token = ClusterToken(*c);
    const int copies = SfCopies(r.frequency);
    for (const auto& w : SplitWords(r.surface)) {
      for (int i = 0; i < copies; ++i) out.emplace_back(w, token);
    }
  }
  return out;
}

std::vector<TypingInstance> BuildTypingDataset(const std::vector<Document>& docs,
                                               const Clustering& clustering, ContextFormat format,
                                               const DatasetFilters& filters, DatasetStats* stats) {
  DatasetStats local;
  std::vector<TypingInstance> out;
  for (const auto& doc : docs) {
    for (int i = 0; i < static_cast<int>(doc.mentions.size()); ++i) {
      const Mention& m = doc.mentions[i];
      if (!m.gold) {
        ++local.skipped_nil;
        continue;
      }
      auto label = clustering.Lookup(*m.gold);
      if (!label) {
        ++local.skipped_unclustered;
        continue;
      }
      if (format == ContextFormat::kWC) {
        int len = static_cast<int>(doc.sentences[m.sentence].size());
        if (len < filters.min_sentence_words || len > filters.max_sentence_words) {
          ++local.skipped_sentence;
          continue;
        }
      }
      TypingInstance inst;
      inst.context = ExtractContext(doc, i, format);
      inst.label = *label;
      inst.entity_id = *m.gold;
      inst.key = doc.id + ":" + std::to_string(i);
      out.push_back(std::move(inst));
    }
  }
  local.instances = static_cast<int>(out.size());
  if (stats) *stats = local;
  return out;
}

std::vector<TypingInstance> BuildInferenceWindows(const std::vector<Document>& docs,
                                                  ContextFormat format,
                                                  const std::vector<MentionEntities>* entities) {
  std::vector<TypingInstance> out;
  for (size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    for (int i = 0; i < static_cast<int>(doc.mentions.size()); ++i) {
      TypingInstance inst;
      inst.context = ExtractContext(doc, i, format, entities ? &(*entities)[d] : nullptr);
      inst.entity_id = doc.mentions[i].gold.value_or("NIL");
      inst.key = doc.id + ":" + std::to_string(i);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

void WriteTypingDataset(const std::string& path, ContextFormat format,
                        const std::vector<TypingInstance>& data) {
  auto out = OpenArtifact(path, "typing-data");
  out << "#format\t" << FormatName(format) << '\n';
  for (const auto& inst : data) {
    if (inst.context.format != format) {
      Fail(ErrorCode::kContract, "instance format differs from dataset format");
    }
    out << (inst.label >= 0 ? std::to_string(inst.label) : std::string("?")) << '\t'
        << inst.entity_id << '\t' << JoinTokens(inst.context.left) << '|'
        << JoinTokens(inst.context.surface) << '|' << JoinTokens(inst.context.right);
    if (!inst.key.empty()) out << '\t' << inst.key;
    out << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::vector<TypingInstance> ReadTypingDataset(const std::string& path, ContextFormat* format) {
  LineReader reader(path, "typing-data");
  std::string line;
  if (!reader.Next(&line) || !StartsWith(line, "#format\t")) {
    reader.Error("missing '#format' line");
  }
  ContextFormat fmt = ParseFormat(line.substr(8));
  if (format) *format = fmt;
  std::vector<TypingInstance> out;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() != 3 && cols.size() != 4) reader.Error("expected 3 or 4 columns");
    auto parts = Split(cols[2], '|');
    if (parts.size() != 3) reader.Error("context column needs exactly 'left|surface|right'");
    TypingInstance inst;
    inst.label = cols[0] == "?" ? -1 : static_cast<int>(ParseInt(cols[0], path));
    inst.entity_id = cols[1];
    inst.context.format = fmt;
    inst.context.left = SplitWords(parts[0]);
    inst.context.surface = SplitWords(parts[1]);
    inst.context.right = SplitWords(parts[2]);
    inst.key = cols.size() == 4 ? cols[3] : std::to_string(out.size());
    out.push_back(std::move(inst));
  }
  return out;
}

void WriteStreams(const std::string& path, const TokenStreams& streams) {
  auto out = OpenArtifact(path, "stream");
  for (const auto& s : streams) out << JoinTokens(s) << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

TokenStreams ReadStreams(const std::string& path) {
  LineReader reader(path, "stream");
  TokenStreams out;
  std::string line;
  while (reader.Next(&line)) out.push_back(SplitWords(line));
  return out;
}

void WritePairs(const std::string& path, const TokenPairs& pairs) {
  auto out = OpenArtifact(path, "pairs");
  for (const auto& [a, b] : pairs) out << a << '\t' << b << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

TokenPairs ReadPairs(const std::string& path) {
  LineReader reader(path, "pairs");
  TokenPairs out;
  std::string line;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      reader.Error("expected 'target \\t context'");
    }
    out.emplace_back(cols[0], cols[1]);
  }
  return out;
}

}  // namespace cmt

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

#include "core/corpus.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace cmt {

namespace {
constexpr const char* kCoarseNames[kNumCoarseTypes] = {
    "Person", "Organization", "Location", "SportsTeam", "Misc"};
}  // namespace

const char* CoarseTypeName(CoarseType t) { return kCoarseNames[static_cast<int>(t)]; }

CoarseType ParseCoarseType(std::string_view name) {
  for (int i = 0; i < kNumCoarseTypes; ++i) {
    if (name == kCoarseNames[i]) return static_cast<CoarseType>(i);
  }
  Fail(ErrorCode::kParse, "unknown coarse type '" + std::string(name) + "'");
}

TypeMapping TypeMapping::Load(const std::string& path) {
  TypeMapping mapping;
  LineReader reader(path, "types");
  std::string line;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() != 2) reader.Error("expected 2 tab-separated columns");
    try {
      mapping.Set(cols[0], ParseCoarseType(cols[1]));
    } catch (const cmt::Error& e) {
      reader.Error(e.what());
    }
  }
  return mapping;
}

std::optional<CoarseType> TypeMapping::Lookup(const std::string& label) const {
  auto it = map_.find(label);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

void KnowledgeBase::Add(Entity entity) {
  if (entity.id.empty()) Fail(ErrorCode::kContract, "entity id must be non-empty");
  if (entity.frequency < 0) {
    Fail(ErrorCode::kContract, "entity '" + entity.id + "' has negative frequency");
  }
  auto [it, inserted] = index_.emplace(entity.id, entities_.size());
  if (!inserted) Fail(ErrorCode::kContract, "duplicate entity id '" + entity.id + "'");
  entities_.push_back(std::move(entity));
}

const Entity* KnowledgeBase::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entities_[it->second];
}

Entity* KnowledgeBase::FindMutable(std::string_view id) {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entities_[it->second];
}

KnowledgeBase ParseKb(const std::string& path, const TypeMapping& types) {
  KnowledgeBase kb;
  LineReader reader(path, "kb");
  std::string line;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() < 3 || cols.size() > 4) {
      reader.Error("expected 3 or 4 tab-separated columns, got " + std::to_string(cols.size()));
    }
    Entity e;
    e.id = cols[0];
    if (e.id.empty()) reader.Error("empty entity id");
    std::unordered_map<std::string, std::string> hypernyms;
    if (cols.size() == 4 && !cols[3].empty()) {
      for (const auto& pair : Split(cols[3], ';')) {
        if (pair.empty()) continue;
        auto eq = pair.find('=');
        if (eq == std::string::npos) reader.Error("malformed wikicat replacement '" + pair + "'");
        hypernyms[pair.substr(0, eq)] = pair.substr(eq + 1);
      }
    }
    if (!cols[1].empty()) {
      for (auto& synset : Split(cols[1], ',')) {
        if (synset.empty()) continue;
        if (StartsWith(synset, "wikicat_")) {
          auto it = hypernyms.find(synset);
          if (it == hypernyms.end()) continue;
          synset = it->second;
        }
        if (std::find(e.synsets.begin(), e.synsets.end(), synset) == e.synsets.end()) {
          e.synsets.push_back(synset);
        }
      }
    }
    for (const auto& synset : e.synsets) {
      if (auto t = types.Lookup(synset)) {
        e.coarse_type = *t;
        break;
      }
    }
    try {
      e.frequency = ParseInt(cols[2], "frequency");
    } catch (const cmt::Error& err) {
      reader.Error(err.what());
    }
    try {
      kb.Add(std::move(e));
    } catch (const cmt::Error& err) {
      reader.Error(err.what());
    }
  }
  return kb;
}

void WriteKb(const std::string& path, const KnowledgeBase& kb) {
  auto out = OpenArtifact(path, "kb");
  for (const auto& e : kb.entities()) {
    out << e.id << '\t' << Join(e.synsets, ",") << '\t' << e.frequency << '\n';
  }
}

void SurfaceFormStore::Add(SurfaceFormRecord record) {
  if (record.frequency <= 0) {
    Fail(ErrorCode::kContract, "surface form ('" + record.entity_id + "', '" + record.surface +
                                   "') has non-positive frequency");
  }
  std::string key = record.entity_id + '\t' + record.surface;
  auto it = pair_index_.find(key);
  if (it != pair_index_.end()) {
    records_[it->second].frequency += record.frequency;
    records_[it->second].flags |= record.flags;
    return;
  }
  auto id = static_cast<uint32_t>(records_.size());
  pair_index_.emplace(std::move(key), id);
  auto& by_sf = by_surface_[record.surface];
  if (by_sf.empty()) surface_order_.push_back(record.surface);
  by_sf.push_back(id);
  by_entity_[record.entity_id].push_back(id);
  records_.push_back(std::move(record));
}

std::span<const uint32_t> SurfaceFormStore::BySurface(std::string_view surface) const {
  auto it = by_surface_.find(std::string(surface));
  if (it == by_surface_.end()) return {};
  return it->second;
}

std::span<const uint32_t> SurfaceFormStore::ByEntity(std::string_view entity_id) const {
  auto it = by_entity_.find(std::string(entity_id));
  if (it == by_entity_.end()) return {};
  return it->second;
}

const SurfaceFormRecord* SurfaceFormStore::Find(std::string_view entity_id,
                                                std::string_view surface) const {
  std::string key(entity_id);
  key += '\t';
  key += surface;
  auto it = pair_index_.find(key);
  return it == pair_index_.end() ? nullptr : &records_[it->second];
}

int64_t SurfaceFormStore::EntityTotal(std::string_view entity_id) const {
  int64_t total = 0;
  for (uint32_t id : ByEntity(entity_id)) total += records_[id].frequency;
  return total;
}

SurfaceFormStore ParseSurfaceForms(const std::string& path) {
  SurfaceFormStore store;
  LineReader reader(path, "surface-forms");
  std::string line;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() < 3 || cols.size() > 4) reader.Error("expected 3 or 4 tab-separated columns");
    SurfaceFormRecord rec;
    rec.entity_id = cols[0];
    rec.surface = cols[1];
    if (rec.entity_id.empty() || rec.surface.empty()) reader.Error("empty entity id or surface");
    try {
      rec.frequency = ParseInt(cols[2], "frequency");
      if (cols.size() == 4) {
        for (char c : cols[3]) {
          if (c == 'R') {
            rec.flags |= kFlagRedirect;
          } else if (c == 'D') {
            rec.flags |= kFlagDisambiguation;
          } else {
            Fail(ErrorCode::kParse, std::string("unknown surface flag '") + c + "'");
          }
        }
      }
      store.Add(std::move(rec));
    } catch (const cmt::Error& err) {
      reader.Error(err.what());
    }
  }
  return store;
}

void WriteSurfaceForms(const std::string& path, const SurfaceFormStore& store) {
  auto out = OpenArtifact(path, "surface-forms");
  for (const auto& r : store.records()) {
    out << r.entity_id << '\t' << r.surface << '\t' << r.frequency << '\t';
    if (r.flags & kFlagRedirect) out << 'R';
    if (r.flags & kFlagDisambiguation) out << 'D';
    out << '\n';
  }
}

std::vector<std::string> Document::MentionTokens(const Mention& m) const {
  const auto& s = sentences[m.sentence];
  return {s.begin() + m.start, s.begin() + m.end};
}

void ValidateDocument(const Document& doc) {
  auto fail = [&](size_t i, const std::string& why) {
    Fail(ErrorCode::kContract,
         "document '" + doc.id + "' mention " + std::to_string(i) + ": " + why);
  };
  for (size_t i = 0; i < doc.mentions.size(); ++i) {
    const Mention& m = doc.mentions[i];
    if (m.sentence < 0 || m.sentence >= static_cast<int>(doc.sentences.size())) {
      fail(i, "sentence index out of range");
    }
    int len = static_cast<int>(doc.sentences[m.sentence].size());
    if (m.start < 0 || m.start >= m.end || m.end > len) fail(i, "token span out of range");
    if (Join(doc.MentionTokens(m), " ") != m.surface) fail(i, "surface does not match span");
    if (i > 0) {
      const Mention& p = doc.mentions[i - 1];
      if (std::tie(p.sentence, p.start) >= std::tie(m.sentence, m.start)) {
        fail(i, "mentions out of document order");
      }
      if (p.sentence == m.sentence && p.end > m.start) fail(i, "overlapping mentions");
    }
  }
}

void ParseSentenceLine(std::string_view line, Document* doc) {
  int sentence = static_cast<int>(doc->sentences.size());
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < line.size()) {
    size_t open = line.find("[[", i);
    size_t plain_end = open == std::string_view::npos ? line.size() : open;
    for (auto& w : SplitWords(line.substr(i, plain_end - i))) tokens.push_back(std::move(w));
    if (open == std::string_view::npos) break;
    size_t bar = line.find('|', open + 2);
    size_t close = line.find("]]", open + 2);
    if (bar == std::string_view::npos || close == std::string_view::npos || bar > close) {
      Fail(ErrorCode::kParse, "malformed mention markup in sentence " + std::to_string(sentence));
    }
    std::string id(line.substr(open + 2, bar - open - 2));
    auto words = SplitWords(line.substr(bar + 1, close - bar - 1));
    if (id.empty() || words.empty()) {
      Fail(ErrorCode::kParse, "empty mention id or surface in sentence " + std::to_string(sentence));
    }
    Mention m;
    m.sentence = sentence;
    m.start = static_cast<int>(tokens.size());
    m.end = m.start + static_cast<int>(words.size());
    m.surface = Join(words, " ");
    if (id != "NIL") m.gold = id;
    for (auto& w : words) tokens.push_back(std::move(w));
    doc->mentions.push_back(std::move(m));
    i = close + 2;
  }
  doc->sentences.push_back(std::move(tokens));
}

std::vector<Document> ParseCorpus(const std::string& path) {
  std::vector<Document> docs;
  LineReader reader(path, "corpus");
  std::string line;
  bool in_doc = false;
  auto finish = [&]() {
    if (!in_doc) return;
    try {
      ValidateDocument(docs.back());
    } catch (const cmt::Error& e) {
      reader.Error(e.what());
    }
    in_doc = false;
  };
  while (reader.Next(&line)) {
    if (StartsWith(line, "#DOC")) {
      finish();
      Document d;
      d.id = Trim(line.substr(4));
      if (d.id.empty()) reader.Error("#DOC line without id");
      docs.push_back(std::move(d));
      in_doc = true;
      continue;
    }
    if (Trim(line).empty()) {
      finish();
      continue;
    }
    if (!in_doc) reader.Error("sentence outside of a #DOC block");
    try {
      ParseSentenceLine(line, &docs.back());
    } catch (const cmt::Error& e) {
      reader.Error(e.what());
    }
  }
  finish();
  return docs;
}

std::string RenderSentence(const Document& doc, int sentence) {
  const auto& tokens = doc.sentences[sentence];
  std::string out;
  size_t mi = 0;
  while (mi < doc.mentions.size() && doc.mentions[mi].sentence < sentence) ++mi;
  int t = 0;
  auto emit = [&](const std::string& s) {
    if (!out.empty()) out += ' ';
    out += s;
  };
  while (t < static_cast<int>(tokens.size())) {
    if (mi < doc.mentions.size() && doc.mentions[mi].sentence == sentence &&
        doc.mentions[mi].start == t) {
      const Mention& m = doc.mentions[mi];
      emit("[[" + m.gold.value_or("NIL") + "|" + m.surface + "]]");
      t = m.end;
      ++mi;
    } else {
      emit(tokens[t]);
      ++t;
    }
  }
  return out;
}

void WriteCorpus(const std::string& path, const std::vector<Document>& docs) {
  auto out = OpenArtifact(path, "corpus");
  for (const auto& doc : docs) {
    out << "#DOC " << doc.id << '\n';
    for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
      out << RenderSentence(doc, s) << '\n';
    }
    out << '\n';
  }
}

std::string DeriveMainTitle(std::string_view entity_id) {
  std::string s(entity_id);
  std::replace(s.begin(), s.end(), '_', ' ');
  std::string out;
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '(') {
      size_t close = s.find(')', i);
      if (close != std::string::npos) {
        if (!out.empty() && out.back() == ' ') out.pop_back();
        i = close + 1;
        continue;
      }
    }
    out += s[i++];
  }
  return Trim(out);
}

Document AutoAnnotate(const Document& doc) {
  struct Candidate {
    int sentence, start, end;
    std::string entity;
  };
  // token sequence -> manual occurrences in document order: (sentence, start, entity)
  std::map<std::vector<std::string>, std::vector<std::tuple<int, int, std::string>>> manual;
  for (const auto& m : doc.mentions) {
    if (m.source != MentionSource::kManual || !m.gold) continue;
    manual[doc.MentionTokens(m)].emplace_back(m.sentence, m.start, *m.gold);
  }
  Document out = doc;
  if (manual.empty()) return out;

  for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
    const auto& tokens = doc.sentences[s];
    std::vector<bool> occupied(tokens.size(), false);
    for (const auto& m : out.mentions) {
      if (m.sentence != s) continue;
      for (int t = m.start; t < m.end; ++t) occupied[t] = true;
    }
    std::vector<Candidate> cands;
    for (const auto& [seq, occurrences] : manual) {
      int len = static_cast<int>(seq.size());
      for (int p = 0; p + len <= static_cast<int>(tokens.size()); ++p) {
        if (!std::equal(seq.begin(), seq.end(), tokens.begin() + p)) continue;
        // Most recent manual annotation strictly before this position.
        const std::string* entity = nullptr;
        for (const auto& [os, ot, oe] : occurrences) {
          if (std::tie(os, ot) < std::tie(s, p)) entity = &oe;
        }
        if (entity) cands.push_back({s, p, p + len, *entity});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      int la = a.end - a.start, lb = b.end - b.start;
      if (la != lb) return la > lb;
      return a.start < b.start;
    });
    for (const auto& c : cands) {
      bool free = true;
      for (int t = c.start; t < c.end; ++t) free = free && !occupied[t];
      if (!free) continue;
      for (int t = c.start; t < c.end; ++t) occupied[t] = true;
      Mention m;
      m.sentence = c.sentence;
      m.start = c.start;
      m.end = c.end;
      m.surface = Join({tokens.begin() + c.start, tokens.begin() + c.end}, " ");
      m.gold = c.entity;
      m.source = MentionSource::kAuto;
      out.mentions.push_back(std::move(m));
    }
  }
  std::stable_sort(out.mentions.begin(), out.mentions.end(), [](const Mention& a, const Mention& b) {
    return std::tie(a.sentence, a.start) < std::tie(b.sentence, b.start);
  });
  return out;
}

}  // namespace cmt

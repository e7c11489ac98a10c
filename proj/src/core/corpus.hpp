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

// Knowledge base, surface-form data set and annotated documents.

#ifndef CMTNED_CORE_CORPUS_HPP_
#define CMTNED_CORE_CORPUS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/common.hpp"

namespace cmt {

enum class CoarseType { kPerson = 0, kOrganization, kLocation, kSportsTeam, kMisc };
inline constexpr int kNumCoarseTypes = 5;

const char* CoarseTypeName(CoarseType t);
CoarseType ParseCoarseType(std::string_view name);

struct Entity {
  std::string id;
  std::vector<std::string> synsets;
  CoarseType coarse_type = CoarseType::kMisc;
  int64_t frequency = 0;
  // Cluster-based type per flavor, filled by AssignTypes().
  std::array<std::optional<int>, kNumFlavors> cluster_types;
};

// synset or BaseKB type -> coarse type. Unlisted labels resolve to Misc.
class TypeMapping {
 public:
  static TypeMapping Load(const std::string& path);
  void Set(const std::string& label, CoarseType type) { map_[label] = type; }
  std::optional<CoarseType> Lookup(const std::string& label) const;

 private:
  std::unordered_map<std::string, CoarseType> map_;
};

class KnowledgeBase {
 public:
  // Throws kContract on duplicate or empty id.
  void Add(Entity entity);
  const Entity* Find(std::string_view id) const;
  Entity* FindMutable(std::string_view id);
  const std::vector<Entity>& entities() const { return entities_; }
  std::vector<Entity>& mutable_entities() { return entities_; }
  size_t size() const { return entities_.size(); }

 private:
  std::vector<Entity> entities_;
  std::unordered_map<std::string, size_t> index_;
};

// Parses a KB TSV. wikicat_* synsets are replaced by the hypernym given in the
// optional fourth column, or dropped; the coarse type is the mapping of the
// first mapped synset.
KnowledgeBase ParseKb(const std::string& path, const TypeMapping& types);
void WriteKb(const std::string& path, const KnowledgeBase& kb);

enum SurfaceFlag : uint8_t { kFlagRedirect = 1, kFlagDisambiguation = 2 };

struct SurfaceFormRecord {
  std::string entity_id;
  std::string surface;
  int64_t frequency = 0;
  uint8_t flags = 0;
};

class SurfaceFormStore {
 public:
  // Merges duplicates of (entity, surface) by summing frequencies and
  // or-ing flags. Throws kContract on frequency <= 0.
  void Add(SurfaceFormRecord record);

  const std::vector<SurfaceFormRecord>& records() const { return records_; }
  std::span<const uint32_t> BySurface(std::string_view surface) const;
  std::span<const uint32_t> ByEntity(std::string_view entity_id) const;
  const SurfaceFormRecord* Find(std::string_view entity_id, std::string_view surface) const;
  // Sum of the entity's record frequencies.
  int64_t EntityTotal(std::string_view entity_id) const;
  // Distinct surfaces in first-seen order.
  const std::vector<std::string>& surfaces() const { return surface_order_; }

 private:
  std::vector<SurfaceFormRecord> records_;
  std::unordered_map<std::string, uint32_t> pair_index_;
  std::unordered_map<std::string, std::vector<uint32_t>> by_surface_;
  std::unordered_map<std::string, std::vector<uint32_t>> by_entity_;
  std::vector<std::string> surface_order_;
};

SurfaceFormStore ParseSurfaceForms(const std::string& path);
void WriteSurfaceForms(const std::string& path, const SurfaceFormStore& store);

enum class MentionSource { kManual, kAuto };

struct Mention {
  int sentence = 0;
  int start = 0;  // half-open token span [start, end)
  int end = 0;
  std::string surface;
  std::optional<std::string> gold;  // nullopt for NIL
  MentionSource source = MentionSource::kManual;
};

struct Document {
  std::string id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<Mention> mentions;

  std::vector<std::string> MentionTokens(const Mention& m) const;
};

// Checks spans, surface consistency, overlap and ordering. Throws kContract.
void ValidateDocument(const Document& doc);

std::vector<Document> ParseCorpus(const std::string& path);
// Parses one sentence line with inline [[id|w1 w2]] markup into |doc|.
void ParseSentenceLine(std::string_view line, Document* doc);
void WriteCorpus(const std::string& path, const std::vector<Document>& docs);
std::string RenderSentence(const Document& doc, int sentence);

// Underscores become spaces; parenthesized phrases and one preceding space
// are removed; the result is trimmed.
std::string DeriveMainTitle(std::string_view entity_id);

// Greedy propagation of earlier manual annotations to later exact
// occurrences of the same token sequence within the document.
Document AutoAnnotate(const Document& doc);

}  // namespace cmt

#endif  // CMTNED_CORE_CORPUS_HPP_

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

#include "core/surface_types.hpp"

#include <algorithm>
#include <fstream>

namespace cmt {

namespace {

constexpr const char* kSurfaceTypeNames[kNumSurfaceTypes] = {
    "WikiID",   "Redirect",     "Disambiguation", "FirstName",   "Surname",   "FirstWord",
    "LastWord", "PrefixPhrase", "SuffixPhrase",   "BeforeComma", "OrgAcronym"};

void LoadLexicon(const std::string& path, std::unordered_set<std::string>* out) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open lexicon '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    auto w = Trim(line);
    if (!w.empty()) out->insert(w);
  }
}

char AsciiUpper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

}  // namespace

const char* SurfaceTypeName(SurfaceType t) { return kSurfaceTypeNames[static_cast<int>(t)]; }

NameLexicons NameLexicons::Load(const std::string& first_names_path,
                                const std::string& surnames_path) {
  NameLexicons lex;
  LoadLexicon(first_names_path, &lex.first_names);
  LoadLexicon(surnames_path, &lex.surnames);
  return lex;
}

SurfaceTypeSet SurfaceFormTypes(std::string_view surface, const Entity& entity, uint8_t flags,
                                const NameLexicons* lexicons) {
  SurfaceTypeSet types;
  auto set = [&](SurfaceType t) { types.set(static_cast<size_t>(t)); };
  const std::string title = DeriveMainTitle(entity.id);
  const std::string sf(surface);

  if (sf == title) set(SurfaceType::kWikiId);
  if (flags & kFlagRedirect) set(SurfaceType::kRedirect);
  if (flags & kFlagDisambiguation) set(SurfaceType::kDisambiguation);
  if (lexicons && entity.coarse_type == CoarseType::kPerson) {
    if (lexicons->first_names.count(sf)) set(SurfaceType::kFirstName);
    if (lexicons->surnames.count(sf)) set(SurfaceType::kSurname);
  }

  const auto title_words = SplitWords(title);
  const auto sf_words = SplitWords(sf);
  const size_t n = title_words.size();
  const size_t m = sf_words.size();
  if (n >= 2 && m >= 1 && m < n) {
    if (m == 1 && sf == title_words.front()) set(SurfaceType::kFirstWord);
    if (m == 1 && sf == title_words.back()) set(SurfaceType::kLastWord);
    if (std::equal(sf_words.begin(), sf_words.end(), title_words.begin())) {
      set(SurfaceType::kPrefixPhrase);
    }
    if (std::equal(sf_words.begin(), sf_words.end(), title_words.end() - m)) {
      set(SurfaceType::kSuffixPhrase);
    }
  }
  auto comma = title.find(',');
  if (comma != std::string::npos && comma > 0 && sf == Trim(title.substr(0, comma))) {
    set(SurfaceType::kBeforeComma);
  }
  if (n >= 2) {
    std::string initials;
    for (const auto& w : title_words) initials += AsciiUpper(w.front());
    std::string compact;
    for (char c : sf) {
      if (c != '.') compact += AsciiUpper(c);
    }
    if (compact == initials) set(SurfaceType::kOrgAcronym);
  }
  return types;
}

std::array<double, kNumCoarseTypes> EntityTypeBinary(const Entity& entity) {
  std::array<double, kNumCoarseTypes> out{};
  out[static_cast<size_t>(entity.coarse_type)] = 1.0;
  return out;
}

}  // namespace cmt

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

#ifndef CMTNED_CORE_SURFACE_TYPES_HPP_
#define CMTNED_CORE_SURFACE_TYPES_HPP_

#include <array>
#include <bitset>
#include <string>
#include <string_view>
#include <unordered_set>

#include "core/corpus.hpp"

namespace cmt {

// Slot order of surface-form-type-in-binary.
enum class SurfaceType {
  kWikiId = 0,
  kRedirect,
  kDisambiguation,
  kFirstName,
  kSurname,
  kFirstWord,
  kLastWord,
  kPrefixPhrase,
  kSuffixPhrase,
  kBeforeComma,
  kOrgAcronym,
};
inline constexpr int kNumSurfaceTypes = 11;
using SurfaceTypeSet = std::bitset<kNumSurfaceTypes>;

const char* SurfaceTypeName(SurfaceType t);

struct NameLexicons {
  std::unordered_set<std::string> first_names;
  std::unordered_set<std::string> surnames;

  // Either path may be empty; one name per line.
  static NameLexicons Load(const std::string& first_names_path,
                           const std::string& surnames_path);
};

// Types of |surface| as a name of |entity|. |flags| are the surface-form
// record's Redirect/Disambiguation bits; |lexicons| may be null.
SurfaceTypeSet SurfaceFormTypes(std::string_view surface, const Entity& entity, uint8_t flags,
                                const NameLexicons* lexicons);

// One-hot over [Person, Organization, Location, SportsTeam, Misc].
std::array<double, kNumCoarseTypes> EntityTypeBinary(const Entity& entity);

}  // namespace cmt

#endif  // CMTNED_CORE_SURFACE_TYPES_HPP_

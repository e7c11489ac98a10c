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

#ifndef CMTNED_CORE_COMMON_HPP_
#define CMTNED_CORE_COMMON_HPP_

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cmt {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kContract = 4,
  kMissingArtifact = 5,
  kVersion = 6,
  kInternal = 7,
};

// All failures inside the core are reported with this exception; the C API
// maps the code onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

// The five clustering / typing flavors.
enum class Flavor { kWord = 0, kSurface = 1, kEntity = 2, kSynset = 3, kBrown = 4 };
inline constexpr int kNumFlavors = 5;

const char* FlavorName(Flavor f);
Flavor ParseFlavor(std::string_view name);

// Context formats a mention window can be rendered in.
enum class ContextFormat { kWC = 0, kSFC = 1, kEC = 2 };

const char* FormatName(ContextFormat f);
ContextFormat ParseFormat(std::string_view name);

// Word&Synset -> WC, Surface&Brown -> SFC, Entity -> EC.
ContextFormat FormatForFlavor(Flavor f);

// ---- strings -------------------------------------------------------------

std::vector<std::string> Split(std::string_view s, char sep);
// Splits on runs of spaces; no empty tokens.
std::vector<std::string> SplitWords(std::string_view s);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);
std::string Trim(std::string_view s);
std::string AsciiLower(std::string_view s);
bool StartsWith(std::string_view s, std::string_view prefix);

// Strict numeric parsing; throws kParse with |context| in the message.
int64_t ParseInt(std::string_view s, const std::string& context);
double ParseDouble(std::string_view s, const std::string& context);

// Decodes UTF-8 into code points. Invalid bytes are mapped to U+FFFD.
std::u32string DecodeUtf8(std::string_view s);
std::string EncodeUtf8(std::u32string_view s);

// Fixed 6-decimal rendering used by every text artifact.
std::string Fixed6(double v);

// ---- artifact files --------------------------------------------------------

inline constexpr int kArtifactVersion = 1;

// Writers emit "#cmtned <kind> v1" as the first line. Readers accept files
// without the line (externally produced inputs) but reject a header with the
// wrong kind or version.
std::string ArtifactHeader(std::string_view kind);

// Line reader over a file that transparently validates/skips the artifact
// header. Tracks 1-based line numbers for error messages.
class LineReader {
 public:
  LineReader(const std::string& path, std::string_view kind);
  bool Next(std::string* line);
  int line_number() const { return line_no_; }
  const std::string& path() const { return path_; }
  [[noreturn]] void Error(const std::string& message) const;

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
  std::optional<std::string> pending_;
};

// Opens |path| for writing and emits the artifact header.
std::ofstream OpenArtifact(const std::string& path, std::string_view kind);

bool FileExists(const std::string& path);

}  // namespace cmt

#endif  // CMTNED_CORE_COMMON_HPP_

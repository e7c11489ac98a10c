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

#include "core/common.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

namespace cmt {

void Fail(ErrorCode code, const std::string& message) {
  throw cmt::Error(code, message);
}

namespace {
constexpr const char* kFlavorNames[kNumFlavors] = {"Word", "Surface", "Entity",
                                                   "Synset", "Brown"};
}  // namespace

const char* FlavorName(Flavor f) { return kFlavorNames[static_cast<int>(f)]; }

Flavor ParseFlavor(std::string_view name) {
  std::string lower = AsciiLower(name);
  for (int i = 0; i < kNumFlavors; ++i) {
    if (lower == AsciiLower(kFlavorNames[i])) return static_cast<Flavor>(i);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown flavor '" + std::string(name) + "'");
}

const char* FormatName(ContextFormat f) {
  switch (f) {
    case ContextFormat::kWC: return "WC";
    case ContextFormat::kSFC: return "SFC";
    case ContextFormat::kEC: return "EC";
  }
  return "?";
}

ContextFormat ParseFormat(std::string_view name) {
  std::string lower = AsciiLower(name);
  if (lower == "wc") return ContextFormat::kWC;
  if (lower == "sfc") return ContextFormat::kSFC;
  if (lower == "ec") return ContextFormat::kEC;
  Fail(ErrorCode::kInvalidArgument, "unknown context format '" + std::string(name) + "'");
}

ContextFormat FormatForFlavor(Flavor f) {
  switch (f) {
    case Flavor::kWord:
    case Flavor::kSynset: return ContextFormat::kWC;
    case Flavor::kSurface:
    case Flavor::kBrown: return ContextFormat::kSFC;
    case Flavor::kEntity: return ContextFormat::kEC;
  }
  return ContextFormat::kWC;
}

std::vector<std::string> Split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> SplitWords(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::string AsciiLower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

int64_t ParseInt(std::string_view s, const std::string& context) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    Fail(ErrorCode::kParse, context + ": expected integer, got '" + std::string(s) + "'");
  }
  return v;
}

double ParseDouble(std::string_view s, const std::string& context) {
  std::string buf(s);
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || errno == ERANGE ||
      !std::isfinite(v)) {
    Fail(ErrorCode::kParse, context + ": expected number, got '" + buf + "'");
  }
  return v;
}

std::u32string DecodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c >> 4) == 0xE) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c >> 3) == 0x1E) {
      len = 4;
      cp = c & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string EncodeUtf8(std::u32string_view s) {
  std::string out;
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::string Fixed6(double v) {
  char buf[64];
  // Avoid "-0.000000" so golden files do not depend on the sign of tiny values.
  if (std::fabs(v) < 5e-7) v = 0.0;
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string ArtifactHeader(std::string_view kind) {
  return "#cmtned " + std::string(kind) + " v" + std::to_string(kArtifactVersion);
}

LineReader::LineReader(const std::string& path, std::string_view kind)
    : path_(path), in_(path) {
  if (!in_) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string first;
  if (!std::getline(in_, first)) return;
  ++line_no_;
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (StartsWith(first, "#cmtned ")) {
    auto parts = SplitWords(first);
    if (parts.size() != 3 || parts[1] != kind) {
      Fail(ErrorCode::kVersion, path + ": expected artifact kind '" + std::string(kind) +
                                    "', found header '" + first + "'");
    }
    if (parts[2] != "v" + std::to_string(kArtifactVersion)) {
      Fail(ErrorCode::kVersion, path + ": unsupported artifact version '" + parts[2] +
                                    "' (this build reads v" +
                                    std::to_string(kArtifactVersion) + ")");
    }
    return;
  }
  pending_ = std::move(first);
}

bool LineReader::Next(std::string* line) {
  if (pending_) {
    *line = std::move(*pending_);
    pending_.reset();
    return true;
  }
  if (!std::getline(in_, *line)) return false;
  ++line_no_;
  if (!line->empty() && line->back() == '\r') line->pop_back();
  return true;
}

void LineReader::Error(const std::string& message) const {
  Fail(ErrorCode::kParse, path_ + ":" + std::to_string(line_no_) + ": " + message);
}

std::ofstream OpenArtifact(const std::string& path, std::string_view kind) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << ArtifactHeader(kind) << '\n';
  return out;
}

bool FileExists(const std::string& path) { return std::filesystem::exists(path); }

}  // namespace cmt

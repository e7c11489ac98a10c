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

#include "core/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "core/surface_types.hpp"

namespace cmt {

namespace {

constexpr char kTypingPrefix[] = "typing_prob_";

std::string TypingName(const char* prefix, Flavor f) { return prefix + std::string(FlavorName(f)); }

// Cosine that reports "undefined" for empty or zero vectors instead of
// throwing.
std::optional<double> SafeCosine(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty() || a.size() != b.size()) return std::nullopt;
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return std::nullopt;
  return dot / std::sqrt(na * nb);
}

}  // namespace

FeatureLayout::FeatureLayout(int stage, std::vector<Flavor> flavors, bool raw_doc_sim)
    : stage_(stage), flavors_(std::move(flavors)), raw_doc_sim_(raw_doc_sim) {
  if (stage != 1 && stage != 2) Fail(ErrorCode::kInvalidArgument, "stage must be 1 or 2");
  for (size_t i = 0; i < flavors_.size(); ++i) {
    if (flavors_[i] == Flavor::kEntity) {
      Fail(ErrorCode::kContract, "stage-1 typing flavors must not include Entity");
    }
    for (size_t j = 0; j < i; ++j) {
      if (flavors_[i] == flavors_[j]) Fail(ErrorCode::kInvalidArgument, "duplicate typing flavor");
    }
  }
  names_ = {"sf_edit_distance", "entity_log_freq"};
  for (int t = 0; t < kNumSurfaceTypes; ++t) {
    names_.push_back(std::string("sf_type_") + SurfaceTypeName(static_cast<SurfaceType>(t)));
  }
  for (int t = 0; t < kNumCoarseTypes; ++t) {
    names_.push_back(std::string("entity_type_") + CoarseTypeName(static_cast<CoarseType>(t)));
  }
  for (Flavor f : flavors_) names_.push_back(TypingName(kTypingPrefix, f));
  names_.push_back("avg_sf_edit_distance");
  names_.push_back("max_diff_sf_log_freq");
  names_.push_back("max_diff_doc_sim");
  for (Flavor f : flavors_) names_.push_back(TypingName("max_diff_typing_prob_", f));
  for (Flavor f : flavors_) names_.push_back(TypingName("max_typing_prob_in_doc_", f));
  if (raw_doc_sim_) names_.push_back("doc_sim");
  if (stage_ == 2) {
    names_.push_back(TypingName(kTypingPrefix, Flavor::kEntity));
    names_.push_back(TypingName("max_diff_typing_prob_", Flavor::kEntity));
    names_.push_back(TypingName("max_typing_prob_in_doc_", Flavor::kEntity));
    names_.push_back("max_ranking_score");
    names_.push_back("max_cos_sim_in_context");
  }
}

FeatureLayout FeatureLayout::FromNames(const std::vector<std::string>& names) {
  std::vector<Flavor> flavors;
  bool stage2 = false, raw = false;
  for (const auto& n : names) {
    if (n == "avg_sf_edit_distance") break;
    if (StartsWith(n, kTypingPrefix)) {
      try {
        flavors.push_back(ParseFlavor(n.substr(sizeof(kTypingPrefix) - 1)));
      } catch (const Error&) {
        Fail(ErrorCode::kContract, "unknown feature slot '" + n + "'");
      }
    }
  }
  for (const auto& n : names) {
    if (n == "max_ranking_score") stage2 = true;
    if (n == "doc_sim") raw = true;
  }
  FeatureLayout layout(stage2 ? 2 : 1, flavors, raw);
  if (layout.names() != names) {
    Fail(ErrorCode::kContract, "feature columns do not form a known layout");
  }
  return layout;
}

std::vector<Flavor> FeatureLayout::typing_flavors() const {
  std::vector<Flavor> out = flavors_;
  if (stage_ == 2) out.push_back(Flavor::kEntity);
  return out;
}

int FeatureLayout::Slot(std::string_view name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> MaxDiff(const std::vector<double>& values, const std::vector<std::string>& ids) {
  std::vector<double> out(values.size(), 0.0);
  if (values.size() < 2) return out;
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best] || (values[i] == values[best] && ids[i] < ids[best])) best = i;
  }
  double second = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < values.size(); ++i) {
    if (i != best) second = std::max(second, values[i]);
  }
  for (size_t i = 0; i < values.size(); ++i) {
    out[i] = i == best ? values[i] - second : values[best] - values[i];
  }
  return out;
}

double LogFreq(int64_t freq) { return freq > 0 ? std::log(static_cast<double>(freq)) : 0.0; }

double CandidateTypingProb(const std::vector<double>& probs, const std::vector<int>& class_ids,
                           const Entity* entity, Flavor flavor) {
  if (!entity) return 0.0;
  const auto& type = entity->cluster_types[static_cast<int>(flavor)];
  if (!type) return 0.0;
  for (size_t i = 0; i < class_ids.size() && i < probs.size(); ++i) {
    if (class_ids[i] == *type) return probs[i];
  }
  return 0.0;
}

std::vector<std::vector<std::vector<double>>> ComputeFeatures(const FeatureLayout& layout,
                                                              const CandidateSets& sets,
                                                              const DocumentScores& scores,
                                                              const FeatureResources& res) {
  if (!res.store) Fail(ErrorCode::kInvalidArgument, "feature extraction needs a surface-form store");
  if (scores.size() != sets.size()) {
    Fail(ErrorCode::kContract, "scores do not align with candidate sets");
  }
  const std::vector<Flavor> flavors = layout.typing_flavors();
  const bool stage2 = layout.stage() == 2;
  for (size_t m = 0; m < sets.size(); ++m) {
    if (scores[m].size() != sets[m].size()) {
      Fail(ErrorCode::kContract, "scores do not align with candidates of mention " + std::to_string(m));
    }
    for (size_t c = 0; c < sets[m].size(); ++c) {
      for (Flavor f : flavors) {
        if (!scores[m][c].typing[static_cast<int>(f)]) {
          Fail(ErrorCode::kContract, std::string("missing ") + FlavorName(f) +
                                         " typing probability for candidate '" +
                                         sets[m][c].entity_id + "' of mention " + std::to_string(m));
        }
      }
      if (stage2 && !scores[m][c].rank_prob) {
        Fail(ErrorCode::kContract, "stage-2 features need first-stage ranking scores (candidate '" +
                                       sets[m][c].entity_id + "' of mention " + std::to_string(m) + ")");
      }
    }
  }
  auto typing = [&](size_t m, size_t c, Flavor f) { return *scores[m][c].typing[static_cast<int>(f)]; };

  // Document-level maxima per entity and flavor.
  std::unordered_map<std::string, std::array<double, kNumFlavors>> doc_max;
  for (size_t m = 0; m < sets.size(); ++m) {
    for (size_t c = 0; c < sets[m].size(); ++c) {
      auto [it, fresh] = doc_max.try_emplace(sets[m][c].entity_id);
      if (fresh) it->second.fill(-std::numeric_limits<double>::infinity());
      for (Flavor f : flavors) {
        double& slot = it->second[static_cast<int>(f)];
        slot = std::max(slot, typing(m, c, f));
      }
    }
  }

  // Stage 2: top-N candidates per mention by R_c.
  std::vector<std::vector<size_t>> top;
  if (stage2) {
    for (size_t m = 0; m < sets.size(); ++m) {
      std::vector<size_t> order(sets[m].size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        double ra = *scores[m][a].rank_prob, rb = *scores[m][b].rank_prob;
        if (ra != rb) return ra > rb;
        return sets[m][a].entity_id < sets[m][b].entity_id;
      });
      if (static_cast<int>(order.size()) > res.options.context_top_n) {
        order.resize(std::max(0, res.options.context_top_n));
      }
      top.push_back(std::move(order));
    }
  }

  std::vector<std::vector<std::vector<double>>> out(sets.size());
  for (size_t m = 0; m < sets.size(); ++m) {
    const auto& cands = sets[m];
    const size_t n = cands.size();
    std::vector<std::string> ids(n);
    std::vector<double> sf_log(n), doc_sim(n);
    double edit_sum = 0;
    for (size_t c = 0; c < n; ++c) {
      ids[c] = cands[c].entity_id;
      const SurfaceFormRecord* rec = res.store->Find(cands[c].entity_id, cands[c].best_sf);
      sf_log[c] = LogFreq(rec ? rec->frequency : 0);
      doc_sim[c] = scores[m][c].doc_sim;
      edit_sum += cands[c].edit_distance;
    }
    const double avg_edit = n ? edit_sum / n : 0.0;
    const auto md_sf = MaxDiff(sf_log, ids);
    const auto md_doc = MaxDiff(doc_sim, ids);
    std::array<std::vector<double>, kNumFlavors> md_typing;
    for (Flavor f : flavors) {
      std::vector<double> v(n);
      for (size_t c = 0; c < n; ++c) v[c] = typing(m, c, f);
      md_typing[static_cast<int>(f)] = MaxDiff(v, ids);
    }

    out[m].resize(n);
    for (size_t c = 0; c < n; ++c) {
      const CandidateMatch& cand = cands[c];
      const Entity* entity = res.kb ? res.kb->Find(cand.entity_id) : nullptr;
      std::vector<double>& v = out[m][c];
      v.reserve(layout.size());
      v.push_back(cand.edit_distance);
      v.push_back(LogFreq(res.store->EntityTotal(cand.entity_id)));
      for (int t = 0; t < kNumSurfaceTypes; ++t) v.push_back(cand.sf_types[t] ? 1.0 : 0.0);
      std::array<double, kNumCoarseTypes> etype{};
      if (entity) etype = EntityTypeBinary(*entity);
      v.insert(v.end(), etype.begin(), etype.end());
      for (Flavor f : layout.flavors()) v.push_back(typing(m, c, f));
      v.push_back(avg_edit);
      v.push_back(md_sf[c]);
      v.push_back(md_doc[c]);
      for (Flavor f : layout.flavors()) v.push_back(md_typing[static_cast<int>(f)][c]);
      const auto& dm = doc_max.at(cand.entity_id);
      for (Flavor f : layout.flavors()) v.push_back(dm[static_cast<int>(f)]);
      if (layout.raw_doc_sim()) v.push_back(doc_sim[c]);
      if (stage2) {
        const int e = static_cast<int>(Flavor::kEntity);
        v.push_back(typing(m, c, Flavor::kEntity));
        v.push_back(md_typing[e][c]);
        v.push_back(dm[e]);

        // Previous occurrences first; otherwise later WikiID-typed ones.
        std::optional<double> prev, next;
        for (size_t j = 0; j < sets.size(); ++j) {
          if (j == m) continue;
          for (size_t k = 0; k < sets[j].size(); ++k) {
            if (sets[j][k].entity_id != cand.entity_id) continue;
            double r = *scores[j][k].rank_prob;
            if (j < m) {
              prev = std::max(prev.value_or(r), r);
            } else if (sets[j][k].sf_types[static_cast<int>(SurfaceType::kWikiId)]) {
              next = std::max(next.value_or(r), r);
            }
          }
        }
        v.push_back(prev ? *prev : next.value_or(0.0));

        std::optional<double> best_cos;
        if (res.entity_vectors) {
          auto ec = res.entity_vectors->Lookup(cand.entity_id);
          const int M = res.options.context_window;
          for (size_t j = 0; j < sets.size(); ++j) {
            const int dist = std::abs(static_cast<int>(j) - static_cast<int>(m));
            if (dist == 0 || dist > M) continue;
            for (size_t k : top[j]) {
              auto cos = SafeCosine(ec, res.entity_vectors->Lookup(sets[j][k].entity_id));
              if (!cos) continue;
              double val = *cos * typing(j, k, Flavor::kEntity);
              best_cos = std::max(best_cos.value_or(val), val);
            }
          }
        }
        v.push_back(best_cos.value_or(0.0));
      }
      if (v.size() != layout.size()) Fail(ErrorCode::kInternal, "feature layout size mismatch");
      for (double x : v) {
        if (!std::isfinite(x)) {
          Fail(ErrorCode::kContract, "non-finite feature for candidate '" + cand.entity_id + "'");
        }
      }
    }
  }
  return out;
}

void WriteFeatureTable(const std::string& path, const FeatureTable& table) {
  auto out = OpenArtifact(path, "features");
  out << "doc_id\tmention_index\tentity_id";
  for (const auto& n : table.names) out << '\t' << n;
  out << "\tlabel\n";
  for (const auto& row : table.rows) {
    if (row.values.size() != table.names.size()) {
      Fail(ErrorCode::kContract, "feature row width does not match the header");
    }
    out << row.doc_id << '\t' << row.mention << '\t' << row.entity_id;
    for (double v : row.values) out << '\t' << Fixed6(v);
    out << '\t' << row.label << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

FeatureTable ReadFeatureTable(const std::string& path) {
  LineReader reader(path, "features");
  std::string line;
  if (!reader.Next(&line)) reader.Error("missing feature header");
  auto head = Split(line, '\t');
  if (head.size() < 5 || head[0] != "doc_id" || head[1] != "mention_index" ||
      head[2] != "entity_id" || head.back() != "label") {
    reader.Error("feature header must be doc_id, mention_index, entity_id, slots..., label");
  }
  FeatureTable table;
  table.names.assign(head.begin() + 3, head.end() - 1);
  FeatureLayout::FromNames(table.names);
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() != head.size()) reader.Error("expected " + std::to_string(head.size()) + " columns");
    FeatureRow row;
    row.doc_id = cols[0];
    row.mention = static_cast<int>(ParseInt(cols[1], path));
    row.entity_id = cols[2];
    for (size_t i = 3; i + 1 < cols.size(); ++i) row.values.push_back(ParseDouble(cols[i], path));
    row.label = static_cast<int>(ParseInt(cols.back(), path));
    if (row.label != 0 && row.label != 1) reader.Error("label must be 0 or 1");
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<std::pair<size_t, size_t>> MentionGroups(const FeatureTable& table) {
  std::vector<std::pair<size_t, size_t>> groups;
  size_t start = 0;
  for (size_t i = 1; i <= table.rows.size(); ++i) {
    if (i == table.rows.size() || table.rows[i].doc_id != table.rows[start].doc_id ||
        table.rows[i].mention != table.rows[start].mention) {
      if (i > start) groups.emplace_back(start, i);
      start = i;
    }
  }
  return groups;
}

}  // namespace cmt

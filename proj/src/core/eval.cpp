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

#include "core/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "core/common.hpp"

namespace cmt {

namespace {

constexpr char kNil[] = "NIL";

Prf FromCounts(int64_t correct, int64_t predicted, int64_t gold) {
  Prf p;
  p.correct = correct;
  p.predicted = predicted;
  p.gold = gold;
  p.precision = predicted > 0 ? static_cast<double>(correct) / predicted : 0.0;
  p.recall = gold > 0 ? static_cast<double>(correct) / gold : 0.0;
  // 2PR/(P+R) written on counts so hand-computed fractions compare exactly.
  p.f1 = correct > 0 ? 2.0 * correct / (predicted + gold) : 0.0;
  return p;
}

void CheckAligned(const std::vector<GoldMention>& golds,
                  const std::vector<std::optional<std::string>>& aligned) {
  if (golds.size() != aligned.size()) {
    Fail(ErrorCode::kContract, "predictions are not aligned with gold mentions");
  }
}

}  // namespace

void WritePredictions(const std::string& path, const std::vector<Prediction>& preds) {
  auto out = OpenArtifact(path, "predictions");
  for (const auto& p : preds) {
    out << p.doc_id << '\t' << p.mention << '\t' << (p.entity ? *p.entity : kNil) << '\t'
        << Fixed6(p.score) << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::vector<Prediction> ReadPredictions(const std::string& path) {
  LineReader reader(path, "predictions");
  std::vector<Prediction> preds;
  std::string line;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto cols = Split(line, '\t');
    if (cols.size() != 4) reader.Error("expected doc_id, mention_index, entity, R");
    Prediction p;
    p.doc_id = cols[0];
    p.mention = static_cast<int>(ParseInt(cols[1], path));
    if (cols[2] != kNil) p.entity = cols[2];
    p.score = ParseDouble(cols[3], path);
    preds.push_back(std::move(p));
  }
  return preds;
}

std::vector<GoldMention> GoldsFromCorpus(const std::vector<Document>& docs) {
  std::vector<GoldMention> golds;
  for (const auto& d : docs) {
    for (size_t i = 0; i < d.mentions.size(); ++i) {
      golds.push_back({d.id, static_cast<int>(i), d.mentions[i].gold});
    }
  }
  return golds;
}

std::vector<std::optional<std::string>> AlignPredictions(const std::vector<GoldMention>& golds,
                                                         const std::vector<Prediction>& preds) {
  std::map<std::pair<std::string, int>, size_t> index;
  std::set<std::string> doc_ids;
  for (size_t i = 0; i < golds.size(); ++i) {
    index[{golds[i].doc_id, golds[i].mention}] = i;
    doc_ids.insert(golds[i].doc_id);
  }
  std::vector<std::optional<std::string>> aligned(golds.size());
  std::vector<bool> seen(golds.size(), false);
  for (const auto& p : preds) {
    if (!doc_ids.count(p.doc_id)) {
      Fail(ErrorCode::kContract, "prediction for unknown doc_id '" + p.doc_id + "'");
    }
    auto it = index.find({p.doc_id, p.mention});
    if (it == index.end()) {
      Fail(ErrorCode::kContract, "prediction for unknown mention " + std::to_string(p.mention) +
                                     " of '" + p.doc_id + "'");
    }
    if (seen[it->second]) {
      Fail(ErrorCode::kContract, "duplicate prediction for mention " + std::to_string(p.mention) +
                                     " of '" + p.doc_id + "'");
    }
    seen[it->second] = true;
    aligned[it->second] = p.entity;
  }
  return aligned;
}

Prf MicroPrf(const std::vector<GoldMention>& golds,
             const std::vector<std::optional<std::string>>& aligned) {
  CheckAligned(golds, aligned);
  int64_t correct = 0, predicted = 0, gold = 0;
  for (size_t i = 0; i < golds.size(); ++i) {
    if (!golds[i].entity) continue;
    ++gold;
    if (aligned[i]) {
      ++predicted;
      correct += *aligned[i] == *golds[i].entity;
    }
  }
  return FromCounts(correct, predicted, gold);
}

Prf BotPrf(const std::vector<GoldMention>& golds,
           const std::vector<std::optional<std::string>>& aligned) {
  CheckAligned(golds, aligned);
  std::map<std::string, std::pair<std::set<std::string>, std::set<std::string>>> docs;
  for (size_t i = 0; i < golds.size(); ++i) {
    if (!golds[i].entity) continue;
    auto& [gold, pred] = docs[golds[i].doc_id];
    gold.insert(*golds[i].entity);
    if (aligned[i]) pred.insert(*aligned[i]);
  }
  int64_t correct = 0, predicted = 0, gold_total = 0;
  for (const auto& [id, sets] : docs) {
    gold_total += sets.first.size();
    predicted += sets.second.size();
    for (const auto& e : sets.second) correct += sets.first.count(e);
  }
  return FromCounts(correct, predicted, gold_total);
}

double InKbAccuracy(const std::vector<GoldMention>& golds,
                    const std::vector<std::optional<std::string>>& aligned) {
  CheckAligned(golds, aligned);
  int64_t total = 0, correct = 0;
  for (size_t i = 0; i < golds.size(); ++i) {
    if (!golds[i].entity) continue;
    ++total;
    correct += aligned[i] && *aligned[i] == *golds[i].entity;
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

double RandomizationTest(const std::vector<GoldMention>& golds,
                         const std::vector<std::optional<std::string>>& a,
                         const std::vector<std::optional<std::string>>& b, int rounds, uint64_t seed) {
  CheckAligned(golds, a);
  CheckAligned(golds, b);
  if (rounds < 1) Fail(ErrorCode::kInvalidArgument, "randomization rounds must be >= 1");
  // Per-mention (predicted, correct) contributions of each system.
  struct Counts {
    int predicted = 0;
    int correct = 0;
  };
  std::vector<Counts> ca, cb;
  int64_t gold = 0;
  for (size_t i = 0; i < golds.size(); ++i) {
    if (!golds[i].entity) continue;
    ++gold;
    ca.push_back({a[i] ? 1 : 0, a[i] && *a[i] == *golds[i].entity ? 1 : 0});
    cb.push_back({b[i] ? 1 : 0, b[i] && *b[i] == *golds[i].entity ? 1 : 0});
  }
  auto f1 = [&](int64_t correct, int64_t predicted) { return FromCounts(correct, predicted, gold).f1; };
  int64_t pa = 0, xa = 0, pb = 0, xb = 0;
  for (size_t i = 0; i < ca.size(); ++i) {
    pa += ca[i].predicted;
    xa += ca[i].correct;
    pb += cb[i].predicted;
    xb += cb[i].correct;
  }
  const double observed = std::fabs(f1(xa, pa) - f1(xb, pb));
  std::mt19937_64 rng(seed);
  int64_t count = 0;
  for (int r = 0; r < rounds; ++r) {
    int64_t sa = 0, sxa = 0, sb = 0, sxb = 0;
    for (size_t i = 0; i < ca.size(); ++i) {
      bool swap = (rng() >> 63) != 0;
      const Counts& u = swap ? cb[i] : ca[i];
      const Counts& v = swap ? ca[i] : cb[i];
      sa += u.predicted;
      sxa += u.correct;
      sb += v.predicted;
      sxb += v.correct;
    }
    // Tolerance absorbs rounding in otherwise equal differences.
    if (std::fabs(f1(sxa, sa) - f1(sxb, sb)) >= observed - 1e-12) ++count;
  }
  return static_cast<double>(count + 1) / (rounds + 1);
}

ReportRow Evaluate(const std::string& dataset, const std::vector<GoldMention>& golds,
                   const std::vector<Prediction>& preds) {
  auto aligned = AlignPredictions(golds, preds);
  ReportRow row;
  row.dataset = dataset;
  row.micro = MicroPrf(golds, aligned);
  row.bot_f1 = BotPrf(golds, aligned).f1;
  row.inkb = InKbAccuracy(golds, aligned);
  return row;
}

void WriteReportTsv(const std::string& path, const std::vector<ReportRow>& rows) {
  auto out = OpenArtifact(path, "report");
  out << "dataset\tprecision\trecall\tf1\tbot_f1\tinkb\tgold_recall\n";
  for (const auto& r : rows) {
    out << r.dataset << '\t' << Fixed6(r.micro.precision) << '\t' << Fixed6(r.micro.recall) << '\t'
        << Fixed6(r.micro.f1) << '\t' << Fixed6(r.bot_f1) << '\t' << Fixed6(r.inkb) << '\t'
        << (r.gold_recall ? Fixed6(*r.gold_recall) : "-") << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::vector<ReportRow> ReadReportTsv(const std::string& path) {
  LineReader reader(path, "report");
  std::string line;
  if (!reader.Next(&line) || !StartsWith(line, "dataset\t")) reader.Error("missing report header");
  std::vector<ReportRow> rows;
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto c = Split(line, '\t');
    if (c.size() != 7) reader.Error("expected 7 report columns");
    ReportRow r;
    r.dataset = c[0];
    r.micro.precision = ParseDouble(c[1], path);
    r.micro.recall = ParseDouble(c[2], path);
    r.micro.f1 = ParseDouble(c[3], path);
    r.bot_f1 = ParseDouble(c[4], path);
    r.inkb = ParseDouble(c[5], path);
    if (c[6] != "-") r.gold_recall = ParseDouble(c[6], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string FormatReportTable(const std::vector<ReportRow>& rows) {
  size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.dataset.size());
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-*s %9s %9s %9s %9s %9s %12s\n", static_cast<int>(width),
                "dataset", "P", "R", "F1", "BoT-F1", "InKB", "gold-recall");
  out << buf;
  for (const auto& r : rows) {
    std::string gr = r.gold_recall ? Fixed6(*r.gold_recall).substr(0, 7) : "-";
    std::snprintf(buf, sizeof(buf), "%-*s %9.4f %9.4f %9.4f %9.4f %9.4f %12s\n",
                  static_cast<int>(width), r.dataset.c_str(), r.micro.precision, r.micro.recall,
                  r.micro.f1, r.bot_f1, r.inkb, gr.c_str());
    out << buf;
  }
  return out.str();
}

std::vector<ReplicationRow> SummarizeReplications(const std::vector<ReportRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReportRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.dataset)) order.push_back(r.dataset);
    groups[r.dataset].push_back(&r);
  }
  std::vector<ReplicationRow> out;
  for (const auto& name : order) {
    const auto& g = groups[name];
    ReplicationRow s;
    s.dataset = name;
    s.runs = static_cast<int>(g.size());
    for (int m = 0; m < 5; ++m) {
      auto value = [m](const ReportRow* r) {
        const double v[5] = {r->micro.precision, r->micro.recall, r->micro.f1, r->bot_f1, r->inkb};
        return v[m];
      };
      double mean = 0.0;
      for (const auto* r : g) mean += value(r);
      mean /= static_cast<double>(g.size());
      double ss = 0.0;
      for (const auto* r : g) ss += (value(r) - mean) * (value(r) - mean);
      s.mean.push_back(mean);
      s.sd.push_back(g.size() > 1 ? std::sqrt(ss / static_cast<double>(g.size() - 1)) : 0.0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void WriteReplicationTsv(const std::string& path, const std::vector<ReplicationRow>& rows) {
  auto out = OpenArtifact(path, "replication");
  out << "dataset\truns\tprecision_mean\tprecision_sd\trecall_mean\trecall_sd\tf1_mean\tf1_sd"
         "\tbot_f1_mean\tbot_f1_sd\tinkb_mean\tinkb_sd\n";
  for (const auto& r : rows) {
    out << r.dataset << '\t' << r.runs;
    for (size_t m = 0; m < r.mean.size(); ++m) out << '\t' << Fixed6(r.mean[m]) << '\t' << Fixed6(r.sd[m]);
    out << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::string FormatReplicationTable(const std::vector<ReplicationRow>& rows) {
  size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.dataset.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %4s %17s %17s %17s %17s %17s\n", static_cast<int>(width),
                "dataset", "runs", "P", "R", "F1", "BoT-F1", "InKB");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s %4d", static_cast<int>(width), r.dataset.c_str(), r.runs);
    out << buf;
    for (size_t m = 0; m < r.mean.size(); ++m) {
      std::snprintf(buf, sizeof(buf), " %7.4f +- %6.4f", r.mean[m], r.sd[m]);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cmt

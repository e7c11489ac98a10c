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

// Predictions, micro P/R/F1 with abstention, bag-of-title F1, InKB accuracy,
// the paired approximate randomization test, and report tables.

#ifndef CMTNED_CORE_EVAL_HPP_
#define CMTNED_CORE_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace cmt {

// One mention's output; entity is nullopt for NIL or an abstention.
struct Prediction {
  std::string doc_id;
  int mention = 0;
  std::optional<std::string> entity;
  double score = 0.0;  // R of the top candidate
};

// TSV: doc_id, mention_index, entity or NIL, R.
void WritePredictions(const std::string& path, const std::vector<Prediction>& preds);
std::vector<Prediction> ReadPredictions(const std::string& path);

// Gold annotation of one mention; nullopt for NIL.
struct GoldMention {
  std::string doc_id;
  int mention = 0;
  std::optional<std::string> entity;
};

std::vector<GoldMention> GoldsFromCorpus(const std::vector<Document>& docs);

// Aligns predictions to golds by (doc_id, mention). Throws kContract on an
// unknown doc_id or mention index, or a duplicate prediction. Missing
// predictions count as abstentions.
std::vector<std::optional<std::string>> AlignPredictions(const std::vector<GoldMention>& golds,
                                                         const std::vector<Prediction>& preds);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t correct = 0;
  int64_t predicted = 0;
  int64_t gold = 0;
};

// NIL golds are skipped; abstentions count against recall only; zero
// predictions give P = 0.
Prf MicroPrf(const std::vector<GoldMention>& golds, const std::vector<std::optional<std::string>>& aligned);

// Per document, predicted and gold entity sets (non-NIL golds only) before
// micro aggregation.
Prf BotPrf(const std::vector<GoldMention>& golds, const std::vector<std::optional<std::string>>& aligned);

// Top-1 accuracy over non-NIL golds.
double InKbAccuracy(const std::vector<GoldMention>& golds,
                    const std::vector<std::optional<std::string>>& aligned);

// Paired approximate randomization on micro-F1: each mention's outputs are
// swapped with probability 1/2; p = (count(|d| >= |d_obs|) + 1) / (R + 1).
double RandomizationTest(const std::vector<GoldMention>& golds,
                         const std::vector<std::optional<std::string>>& a,
                         const std::vector<std::optional<std::string>>& b, int rounds, uint64_t seed);

struct ReportRow {
  std::string dataset;
  Prf micro;
  double bot_f1 = 0.0;
  double inkb = 0.0;
  std::optional<double> gold_recall;  // percent
};

ReportRow Evaluate(const std::string& dataset, const std::vector<GoldMention>& golds,
                   const std::vector<Prediction>& preds);

// Machine-readable evaluation TSV (one row per dataset).
void WriteReportTsv(const std::string& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> ReadReportTsv(const std::string& path);
// Aligned text table.
std::string FormatReportTable(const std::vector<ReportRow>& rows);

// Replication summary: rows sharing a dataset name (e.g. one per seed) are
// reduced to mean and sample standard deviation of every metric.
struct ReplicationRow {
  std::string dataset;
  int runs = 0;
  std::vector<double> mean;  // P, R, F1, BoT-F1, InKB
  std::vector<double> sd;
};
std::vector<ReplicationRow> SummarizeReplications(const std::vector<ReportRow>& rows);
void WriteReplicationTsv(const std::string& path, const std::vector<ReplicationRow>& rows);
std::string FormatReplicationTable(const std::vector<ReplicationRow>& rows);

}  // namespace cmt

#endif  // CMTNED_CORE_EVAL_HPP_

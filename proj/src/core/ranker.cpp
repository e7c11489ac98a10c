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

#include "core/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace cmt {

namespace {

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  char buf[32];
  for (size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

void CheckLayout(const RankerModel& model, const std::vector<std::string>& names, const char* what) {
  if (model.config().feature_names != names) {
    Fail(ErrorCode::kContract, std::string(what) + " ranker was trained on a different feature layout (" +
                                   std::to_string(model.input_size()) + " vs " +
                                   std::to_string(names.size()) + " slots)");
  }
}

}  // namespace

RankerModel::RankerModel(const RankerConfig& config, uint64_t seed) : config_(config) {
  if (config.feature_names.empty()) Fail(ErrorCode::kInvalidArgument, "ranker needs input features");
  if (config.dropout.size() != config.hidden.size()) {
    Fail(ErrorCode::kInvalidArgument, "one dropout probability per hidden layer is required");
  }
  for (double p : config.dropout) {
    if (p < 0 || p >= 1) Fail(ErrorCode::kInvalidArgument, "dropout must be in [0, 1)");
  }
  int in = static_cast<int>(config.feature_names.size());
  std::vector<int> widths = config.hidden;
  widths.push_back(2);
  for (size_t l = 0; l < widths.size(); ++l) {
    if (widths[l] < 1) Fail(ErrorCode::kInvalidArgument, "layer widths must be >= 1");
    weights_.push_back(params_.Add("layer" + std::to_string(l) + ".W", widths[l], in));
    biases_.push_back(params_.Add("layer" + std::to_string(l) + ".b", widths[l], 1));
    in = widths[l];
  }
  std::mt19937_64 rng(seed);
  for (const auto& w : weights_) params_.InitUniform(w, std::sqrt(6.0 / w.cols), rng);
  mean_.assign(input_size(), 0.0);
  scale_.assign(input_size(), 1.0);
}

void RankerModel::FitStandardization(const std::vector<const std::vector<double>*>& rows) {
  const size_t d = input_size();
  mean_.assign(d, 0.0);
  scale_.assign(d, 1.0);
  if (rows.empty()) return;
  for (const auto* r : rows) {
    for (size_t i = 0; i < d; ++i) mean_[i] += (*r)[i];
  }
  for (double& m : mean_) m /= rows.size();
  std::vector<double> var(d, 0.0);
  for (const auto* r : rows) {
    for (size_t i = 0; i < d; ++i) var[i] += ((*r)[i] - mean_[i]) * ((*r)[i] - mean_[i]);
  }
  for (size_t i = 0; i < d; ++i) {
    double sd = std::sqrt(var[i] / rows.size());
    scale_[i] = sd > 1e-12 ? sd : 1.0;
  }
}

void RankerModel::Forward(std::span<const double> x, std::mt19937_64* rng, Cache* cache) const {
  if (x.size() != input_size()) {
    Fail(ErrorCode::kContract, "ranker input has " + std::to_string(x.size()) + " features, expected " +
                                   std::to_string(input_size()));
  }
  cache->acts.assign(1, nn::Vec(x.size()));
  for (size_t i = 0; i < x.size(); ++i) cache->acts[0][i] = (x[i] - mean_[i]) / scale_[i];
  cache->masks.clear();
  nn::Vec z;
  for (size_t l = 0; l < config_.hidden.size(); ++l) {
    nn::Affine(params_, weights_[l], biases_[l], cache->acts.back(), &z);
    for (double& v : z) v = v > 0 ? v : 0.0;
    nn::Vec mask = rng ? nn::DropoutMask(z.size(), config_.dropout[l], *rng) : nn::Vec(z.size(), 1.0);
    for (size_t i = 0; i < z.size(); ++i) z[i] *= mask[i];
    cache->masks.push_back(std::move(mask));
    cache->acts.push_back(z);
  }
  nn::Affine(params_, weights_.back(), biases_.back(), cache->acts.back(), &cache->probs);
  nn::SoftmaxInPlace(&cache->probs);
}

double RankerModel::TrueProb(std::span<const double> x) const {
  Cache cache;
  Forward(x, nullptr, &cache);
  return cache.probs[1];
}

double RankerModel::Loss(const std::vector<const std::vector<double>*>& rows,
                         const std::vector<int>& labels, bool grad, std::mt19937_64* rng) {
  if (rows.size() != labels.size()) Fail(ErrorCode::kContract, "rows and labels differ in length");
  if (rows.empty()) return 0.0;
  const double scale = 1.0 / rows.size();
  double total = 0;
  Cache cache;
  nn::Vec d, dprev;
  for (size_t r = 0; r < rows.size(); ++r) {
    Forward(*rows[r], rng, &cache);
    const int y = labels[r] ? 1 : 0;
    total -= std::log(std::max(cache.probs[y], 1e-300));
    if (!grad) continue;
    d = cache.probs;
    d[y] -= 1.0;
    for (double& v : d) v *= scale;
    for (size_t l = weights_.size(); l-- > 0;) {
      dprev.assign(weights_[l].cols, 0.0);
      nn::AffineBackward(&params_, weights_[l], biases_[l], cache.acts[l], d, l > 0 ? &dprev : nullptr);
      if (l == 0) break;
      // acts[l] is the masked ReLU output of hidden layer l-1.
      const nn::Vec& mask = cache.masks[l - 1];
      for (size_t i = 0; i < dprev.size(); ++i) {
        dprev[i] = cache.acts[l][i] > 0 ? dprev[i] * mask[i] : 0.0;
      }
      d.swap(dprev);
    }
  }
  return total * scale;
}

void RankerModel::Save(const std::string& path) const {
  auto out = OpenArtifact(path, "ranker-model");
  out << "stage " << config_.stage << '\n';
  out << "hidden";
  for (int h : config_.hidden) out << ' ' << h;
  out << "\ndropout " << JoinDoubles(config_.dropout) << '\n';
  out << "features " << config_.feature_names.size() << '\n';
  for (const auto& n : config_.feature_names) out << n << '\n';
  out << "mean " << JoinDoubles(mean_) << '\n';
  out << "scale " << JoinDoubles(scale_) << '\n';
  params_.Save(out);
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::unique_ptr<RankerModel> RankerModel::Load(const std::string& path) {
  LineReader reader(path, "ranker-model");
  std::string line;
  auto expect = [&](const char* key) {
    if (!reader.Next(&line)) reader.Error(std::string("missing '") + key + "' line");
    auto words = SplitWords(line);
    if (words.empty() || words[0] != key) reader.Error(std::string("expected '") + key + "'");
    words.erase(words.begin());
    return words;
  };
  RankerConfig cfg;
  auto stage = expect("stage");
  if (stage.size() != 1) reader.Error("bad stage line");
  cfg.stage = static_cast<int>(ParseInt(stage[0], path));
  cfg.hidden.clear();
  for (const auto& w : expect("hidden")) cfg.hidden.push_back(static_cast<int>(ParseInt(w, path)));
  cfg.dropout.clear();
  for (const auto& w : expect("dropout")) cfg.dropout.push_back(ParseDouble(w, path));
  auto nf = expect("features");
  if (nf.size() != 1) reader.Error("bad features line");
  int64_t n = ParseInt(nf[0], path);
  for (int64_t i = 0; i < n; ++i) {
    if (!reader.Next(&line)) reader.Error("truncated feature names");
    cfg.feature_names.push_back(line);
  }
  auto model = std::make_unique<RankerModel>(cfg, 0);
  auto mean = expect("mean");
  auto scale = expect("scale");
  if (static_cast<int64_t>(mean.size()) != n || static_cast<int64_t>(scale.size()) != n) {
    reader.Error("standardization width mismatch");
  }
  for (int64_t i = 0; i < n; ++i) {
    model->mean_[i] = ParseDouble(mean[i], path);
    model->scale_[i] = ParseDouble(scale[i], path);
    if (!(model->scale_[i] > 0)) reader.Error("standardization scale must be positive");
  }
  std::stringstream rest;
  while (reader.Next(&line)) rest << line << '\n';
  model->params_.Load(rest, path);
  return model;
}

std::vector<RankedCandidate> RankCandidates(const RankerModel& model,
                                            const std::vector<std::vector<double>>& features,
                                            const std::vector<std::string>& entity_ids) {
  if (features.size() != entity_ids.size()) {
    Fail(ErrorCode::kContract, "features and entity ids differ in length");
  }
  std::vector<RankedCandidate> out;
  for (size_t i = 0; i < features.size(); ++i) out.push_back({i, model.TrueProb(features[i])});
  std::sort(out.begin(), out.end(), [&](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return entity_ids[a.index] < entity_ids[b.index];
  });
  return out;
}

Prediction ApplyThreshold(Prediction p, double threshold) {
  if (p.entity && p.score < threshold) p.entity.reset();
  return p;
}

double TopOneAccuracy(const RankerModel& model, const FeatureTable& table) {
  auto groups = MentionGroups(table);
  if (groups.empty()) return 0.0;
  int correct = 0;
  std::vector<std::vector<double>> feats;
  std::vector<std::string> ids;
  for (auto [begin, end] : groups) {
    feats.clear();
    ids.clear();
    for (size_t i = begin; i < end; ++i) {
      feats.push_back(table.rows[i].values);
      ids.push_back(table.rows[i].entity_id);
    }
    auto ranked = RankCandidates(model, feats, ids);
    correct += table.rows[begin + ranked.front().index].label == 1;
  }
  return static_cast<double>(correct) / groups.size();
}

std::vector<RankerEpoch> TrainRanker(RankerModel* model, const FeatureTable& train,
                                     const FeatureTable* dev, const RankerHyperparams& hp) {
  if (train.rows.empty()) Fail(ErrorCode::kInvalidArgument, "empty ranker training set");
  if (hp.batch_size < 1) Fail(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  CheckLayout(*model, train.names, "training table does not match:");
  if (dev) CheckLayout(*model, dev->names, "dev table does not match:");
  std::mt19937_64 rng(hp.seed);

  std::vector<size_t> examples;
  for (auto [begin, end] : MentionGroups(train)) {
    std::vector<size_t> negatives;
    for (size_t i = begin; i < end; ++i) {
      if (train.rows[i].label == 1) {
        examples.push_back(i);
      } else {
        negatives.push_back(i);
      }
    }
    if (hp.negatives_per_mention > 0 && static_cast<int>(negatives.size()) > hp.negatives_per_mention) {
      std::shuffle(negatives.begin(), negatives.end(), rng);
      negatives.resize(hp.negatives_per_mention);
      std::sort(negatives.begin(), negatives.end());
    }
    examples.insert(examples.end(), negatives.begin(), negatives.end());
  }
  std::vector<const std::vector<double>*> all_rows;
  for (const auto& r : train.rows) all_rows.push_back(&r.values);
  model->FitStandardization(all_rows);

  nn::NesterovSgd opt({hp.learning_rate, hp.momentum, hp.weight_decay, hp.clip_norm});
  std::vector<RankerEpoch> history;
  std::vector<double> best = model->params().values();
  double best_f1 = -1.0, best_loss = 0.0;
  int stale = 0;
  std::vector<const std::vector<double>*> batch;
  std::vector<int> labels;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(examples.begin(), examples.end(), rng);
    double total = 0;
    for (size_t start = 0; start < examples.size(); start += hp.batch_size) {
      batch.clear();
      labels.clear();
      for (size_t i = start; i < std::min(examples.size(), start + hp.batch_size); ++i) {
        batch.push_back(&train.rows[examples[i]].values);
        labels.push_back(train.rows[examples[i]].label);
      }
      model->params().ZeroGrad();
      total += model->Loss(batch, labels, true, &rng) * batch.size();
      opt.Step(&model->params());
    }
    RankerEpoch e;
    e.epoch = epoch;
    e.train_loss = total / examples.size();
    e.dev_f1 = TopOneAccuracy(*model, dev ? *dev : train);
    history.push_back(e);
    // Equal dev F1 with a lower training loss also counts as progress, so a
    // saturated top-1 metric does not pin the earliest epoch.
    if (e.dev_f1 > best_f1 || (e.dev_f1 == best_f1 && e.train_loss < best_loss)) {
      best_f1 = e.dev_f1;
      best_loss = e.train_loss;
      best = model->params().values();
      stale = 0;
    } else if (hp.patience > 0 && ++stale >= hp.patience) {
      break;
    }
  }
  model->params().values() = best;
  return history;
}

DocSimilarity::DocSimilarity(const std::vector<Document>& reference, const EmbeddingTable& words)
    : words_(&words) {
  std::vector<std::vector<std::string>> bags;
  for (const auto& doc : reference) {
    bags.emplace_back();
    for (const auto& s : doc.sentences) bags.back().insert(bags.back().end(), s.begin(), s.end());
    std::set<std::pair<std::string, int>> seen;
    for (const auto& m : doc.mentions) {
      if (!m.gold || !seen.insert({*m.gold, m.sentence}).second) continue;
      sentences_[*m.gold].push_back({doc.id, doc.sentences[m.sentence]});
    }
  }
  idf_ = IdfTable::Build(bags);
}

double DocSimilarity::Similarity(const Document& doc, std::string_view entity_id) const {
  auto it = sentences_.find(std::string(entity_id));
  if (it == sentences_.end()) return 0.0;
  std::vector<std::string> pseudo, target;
  for (const auto& s : it->second) {
    if (s.doc_id != doc.id) pseudo.insert(pseudo.end(), s.tokens.begin(), s.tokens.end());
  }
  for (const auto& s : doc.sentences) target.insert(target.end(), s.begin(), s.end());
  DocVector dc = DocEmbedding(pseudo, *words_, idf_), dt = DocEmbedding(target, *words_, idf_);
  if (dc.empty || dt.empty) return 0.0;
  double dot = 0;
  for (size_t i = 0; i < dc.values.size(); ++i) dot += dc.values[i] * dt.values[i];
  return dot;
}

std::vector<std::vector<double>> DocSimilarity::Compute(const Document& doc,
                                                        const CandidateSets& sets) const {
  std::vector<std::vector<double>> out(sets.size());
  std::unordered_map<std::string, double> memo;
  for (size_t m = 0; m < sets.size(); ++m) {
    for (const auto& c : sets[m]) {
      auto it = memo.find(c.entity_id);
      if (it == memo.end()) it = memo.emplace(c.entity_id, Similarity(doc, c.entity_id)).first;
      out[m].push_back(it->second);
    }
  }
  return out;
}

void FillTypingScores(const Document& doc, const CandidateSets& sets,
                      const std::vector<Flavor>& flavors, const RankingResources& res,
                      const MentionEntities* ec_entities, DocumentScores* scores) {
  if (scores->size() != sets.size()) scores->resize(sets.size());
  for (size_t m = 0; m < sets.size(); ++m) (*scores)[m].resize(sets[m].size());
  for (Flavor f : flavors) {
    const TypingModel* model = res.typing[static_cast<int>(f)];
    if (!model) {
      Fail(ErrorCode::kContract, std::string("missing ") + FlavorName(f) + " typing model");
    }
    if (model->config().flavor != f) {
      Fail(ErrorCode::kContract, std::string("typing model for ") + FlavorName(f) + " was trained as " +
                                     FlavorName(model->config().flavor));
    }
    if (f == Flavor::kEntity && !ec_entities) {
      Fail(ErrorCode::kContract, "Entity typing needs first-stage entities for the EC windows");
    }
    for (size_t m = 0; m < sets.size(); ++m) {
      if (sets[m].empty()) continue;
      ContextWindow w = ExtractContext(doc, static_cast<int>(m), FormatForFlavor(f),
                                       f == Flavor::kEntity ? ec_entities : nullptr);
      auto probs = model->Predict(w);
      for (size_t c = 0; c < sets[m].size(); ++c) {
        const Entity* e = res.kb ? res.kb->Find(sets[m][c].entity_id) : nullptr;
        (*scores)[m][c].typing[static_cast<int>(f)] = CandidateTypingProb(probs, model->class_ids(), e, f);
      }
    }
  }
}

DocumentScores Stage1Scores(const Document& doc, const CandidateSets& sets,
                            const std::vector<std::vector<double>>& doc_sims,
                            const RankingResources& res) {
  DocumentScores scores(sets.size());
  if (!doc_sims.empty() && doc_sims.size() != sets.size()) {
    Fail(ErrorCode::kContract, "document similarities do not align with candidate sets");
  }
  for (size_t m = 0; m < sets.size(); ++m) {
    scores[m].resize(sets[m].size());
    if (doc_sims.empty()) continue;
    if (doc_sims[m].size() != sets[m].size()) {
      Fail(ErrorCode::kContract, "document similarities do not align with candidates");
    }
    for (size_t c = 0; c < sets[m].size(); ++c) scores[m][c].doc_sim = doc_sims[m][c];
  }
  FillTypingScores(doc, sets, res.stage1_flavors, res, nullptr, &scores);
  return scores;
}

namespace {

// Ranks every mention with |model|, storing per-candidate probabilities.
void RankStage(const Document& doc, const CandidateSets& sets, const RankerModel& model,
               const std::vector<std::vector<std::vector<double>>>& features, double threshold,
               std::vector<std::vector<double>>* probs, MentionEntities* top,
               std::vector<Prediction>* preds) {
  probs->assign(sets.size(), {});
  top->assign(sets.size(), std::nullopt);
  preds->clear();
  for (size_t m = 0; m < sets.size(); ++m) {
    Prediction p;
    p.doc_id = doc.id;
    p.mention = static_cast<int>(m);
    if (!sets[m].empty()) {
      std::vector<std::string> ids;
      for (const auto& c : sets[m]) ids.push_back(c.entity_id);
      auto ranked = RankCandidates(model, features[m], ids);
      (*probs)[m].assign(sets[m].size(), 0.0);
      for (const auto& r : ranked) (*probs)[m][r.index] = r.prob;
      (*top)[m] = ids[ranked.front().index];
      p.entity = ids[ranked.front().index];
      p.score = ranked.front().prob;
    }
    preds->push_back(ApplyThreshold(p, threshold));
  }
}

}  // namespace

DocumentRanking RankDocument(const Document& doc, const CandidateSets& sets,
                             const std::vector<std::vector<double>>& doc_sims,
                             const RankingResources& res, const RankerModel* stage1,
                             const RankerModel* stage2, double threshold,
                             bool stage2_features) {
  if (sets.size() != doc.mentions.size()) {
    Fail(ErrorCode::kContract, "candidate sets do not match the mentions of '" + doc.id + "'");
  }
  FeatureResources fres{res.kb, res.store, res.entity_vectors, res.options};
  DocumentRanking out;
  out.scores = Stage1Scores(doc, sets, doc_sims, res);
  FeatureLayout layout1(1, res.stage1_flavors, res.raw_doc_sim);
  out.stage1_features = ComputeFeatures(layout1, sets, out.scores, fres);
  if (!stage1) return out;
  CheckLayout(*stage1, layout1.names(), "stage-1");
  RankStage(doc, sets, *stage1, out.stage1_features, threshold, &out.stage1_probs, &out.stage1_top,
            &out.stage1_predictions);
  for (size_t m = 0; m < sets.size(); ++m) {
    for (size_t c = 0; c < sets[m].size(); ++c) out.scores[m][c].rank_prob = out.stage1_probs[m][c];
  }
  out.predictions = out.stage1_predictions;
  if (!stage2 && !stage2_features) return out;
  if (!res.typing[static_cast<int>(Flavor::kEntity)]) {
    Fail(ErrorCode::kContract, "stage 2 needs the Entity typing model");
  }
  FillTypingScores(doc, sets, {Flavor::kEntity}, res, &out.stage1_top, &out.scores);
  FeatureLayout layout2(2, res.stage1_flavors, res.raw_doc_sim);
  out.stage2_features = ComputeFeatures(layout2, sets, out.scores, fres);
  if (!stage2) return out;
  CheckLayout(*stage2, layout2.names(), "stage-2");
  MentionEntities top2;
  RankStage(doc, sets, *stage2, out.stage2_features, threshold, &out.stage2_probs, &top2,
            &out.predictions);
  return out;
}

void AppendFeatureRows(const Document& doc, const CandidateSets& sets,
                       const std::vector<std::vector<std::vector<double>>>& features,
                       FeatureTable* table) {
  for (size_t m = 0; m < sets.size(); ++m) {
    const auto& gold = doc.mentions[m].gold;
    for (size_t c = 0; c < sets[m].size(); ++c) {
      table->rows.push_back({doc.id, static_cast<int>(m), sets[m][c].entity_id, features[m][c],
                             gold && *gold == sets[m][c].entity_id ? 1 : 0});
    }
  }
}

}  // namespace cmt

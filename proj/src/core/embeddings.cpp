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

#include "core/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <thread>
#include <unordered_set>

#include "core/common.hpp"

namespace cmt {

void EmbeddingTable::Add(const std::string& token, std::span<const double> values) {
  if (static_cast<int>(values.size()) != dim_) {
    Fail(ErrorCode::kContract, "embedding for '" + token + "' has length " +
                                   std::to_string(values.size()) + ", expected " +
                                   std::to_string(dim_));
  }
  if (!index_.emplace(token, tokens_.size()).second) {
    Fail(ErrorCode::kContract, "duplicate embedding token '" + token + "'");
  }
  tokens_.push_back(token);
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<size_t> EmbeddingTable::Index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingTable::Lookup(std::string_view token) const {
  auto i = Index(token);
  if (!i) return {};
  return Row(*i);
}

void WriteEmbeddings(const std::string& path, const EmbeddingTable& table) {
  auto out = OpenArtifact(path, "embeddings");
  out << table.size() << ' ' << table.dim() << '\n';
  for (size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i];
    for (double v : table.Row(i)) out << ' ' << Fixed6(v);
    out << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

EmbeddingTable ReadEmbeddings(const std::string& path) {
  LineReader reader(path, "embeddings");
  std::string line;
  if (!reader.Next(&line)) reader.Error("missing 'vocab_size dim' line");
  auto head = SplitWords(line);
  if (head.size() != 2) reader.Error("expected 'vocab_size dim'");
  int64_t n = ParseInt(head[0], path);
  int64_t dim = ParseInt(head[1], path);
  if (n <= 0 || dim <= 0) reader.Error("vocab_size and dim must be positive");
  EmbeddingTable table(static_cast<int>(dim));
  std::vector<double> values(dim);
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto parts = SplitWords(line);
    if (static_cast<int64_t>(parts.size()) != dim + 1) {
      reader.Error("expected token and " + std::to_string(dim) + " values");
    }
    for (int64_t d = 0; d < dim; ++d) {
      values[d] = ParseDouble(parts[d + 1], path + ":" + std::to_string(reader.line_number()));
      if (!std::isfinite(values[d])) reader.Error("non-finite component");
    }
    table.Add(parts[0], values);
  }
  if (static_cast<int64_t>(table.size()) != n) {
    Fail(ErrorCode::kParse, path + ": header says " + std::to_string(n) + " tokens, found " +
                                std::to_string(table.size()));
  }
  return table;
}

std::vector<std::pair<size_t, size_t>> WindowPairs(size_t length, int window) {
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t i = 0; i < length; ++i) {
    size_t lo = i >= static_cast<size_t>(window) ? i - window : 0;
    size_t hi = std::min(length - 1, i + window);
    for (size_t j = lo; j <= hi; ++j) {
      if (j != i) out.emplace_back(i, j);
    }
  }
  return out;
}

namespace {

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
double LogSigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double Dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

struct Vocab {
  std::vector<std::string> tokens;  // frequency descending, then token
  std::vector<int64_t> counts;
  std::unordered_map<std::string, int> index;

  static Vocab Build(const std::unordered_map<std::string, int64_t>& counts, int min_count) {
    std::vector<std::pair<std::string, int64_t>> items;
    for (const auto& [t, c] : counts) {
      if (c >= min_count) items.emplace_back(t, c);
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocab v;
    for (auto& [t, c] : items) {
      v.index.emplace(t, static_cast<int>(v.tokens.size()));
      v.tokens.push_back(t);
      v.counts.push_back(c);
    }
    return v;
  }
};

// Cumulative unigram^0.75 distribution.
class NegativeSampler {
 public:
  explicit NegativeSampler(const std::vector<int64_t>& counts) {
    double total = 0;
    for (int64_t c : counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      cdf_.push_back(total);
    }
    for (double& v : cdf_) v /= total;
  }
  int Sample(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<int>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

struct Example {
  int target;
  int context;
};

class Trainer {
 public:
  Trainer(const Vocab& targets, const Vocab& contexts, const SgnsOptions& opt)
      : opt_(opt), nt_(targets.tokens.size()), nc_(contexts.tokens.size()),
        sampler_(contexts.counts) {
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(-0.5 / opt.dim, 0.5 / opt.dim);
    w_.resize(nt_ * opt.dim);
    for (double& v : w_) v = u(rng);
    c_.assign(nc_ * opt.dim, 0.0);
  }

  // Runs all epochs over |examples|; returns per-epoch loss.
  std::vector<double> Run(const std::vector<Example>& examples) {
    std::vector<double> history;
    std::mt19937_64 sample_rng(opt_.seed ^ 0x5bd1e995ULL);
    std::vector<std::pair<Example, std::vector<int>>> frozen;
    for (int i = 0; i < opt_.loss_sample && !examples.empty(); ++i) {
      const Example& ex = examples[sample_rng() % examples.size()];
      std::vector<int> negs;
      for (int k = 0; k < opt_.negatives; ++k) negs.push_back(sampler_.Sample(sample_rng));
      frozen.emplace_back(ex, std::move(negs));
    }
    const double total = static_cast<double>(examples.size()) * opt_.epochs;
    const int threads = (!opt_.deterministic && opt_.threads > 1) ? opt_.threads : 1;
    for (int epoch = 0; epoch < opt_.epochs; ++epoch) {
      if (threads == 1) {
        std::mt19937_64 rng(opt_.seed + 7919ULL * (epoch + 1));
        TrainRange(examples, 0, examples.size(), epoch, total, rng);
      } else {
        std::vector<std::thread> pool;
        size_t shard = (examples.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
          size_t lo = std::min(examples.size(), t * shard);
          size_t hi = std::min(examples.size(), lo + shard);
          pool.emplace_back([this, &examples, lo, hi, epoch, total, t]() {
            std::mt19937_64 rng(opt_.seed + 7919ULL * (epoch + 1) + 104729ULL * t);
            TrainRange(examples, lo, hi, epoch, total, rng);
          });
        }
        for (auto& th : pool) th.join();
      }
      double loss = 0;
      for (const auto& [ex, negs] : frozen) {
        const double* w = &w_[ex.target * opt_.dim];
        loss -= LogSigmoid(Dot(w, &c_[ex.context * opt_.dim], opt_.dim));
        for (int n : negs) loss -= LogSigmoid(-Dot(w, &c_[n * opt_.dim], opt_.dim));
      }
      history.push_back(frozen.empty() ? 0.0 : loss / frozen.size());
    }
    return history;
  }

  EmbeddingTable Export(const std::vector<std::string>& tokens, const std::vector<double>& data) const {
    EmbeddingTable t(opt_.dim);
    for (size_t i = 0; i < tokens.size(); ++i) {
      t.Add(tokens[i], std::span<const double>(data.data() + i * opt_.dim, opt_.dim));
    }
    return t;
  }
  const std::vector<double>& w() const { return w_; }
  const std::vector<double>& c() const { return c_; }

 private:
  void TrainRange(const std::vector<Example>& examples, size_t lo, size_t hi, int epoch,
                  double total, std::mt19937_64& rng) {
    const int dim = opt_.dim;
    std::vector<double> gw(dim);
    for (size_t i = lo; i < hi; ++i) {
      double progress = (static_cast<double>(epoch) * examples.size() + i) / total;
      double lr = opt_.learning_rate * std::max(1e-4, 1.0 - progress);
      const Example& ex = examples[i];
      double* w = &w_[ex.target * dim];
      std::fill(gw.begin(), gw.end(), 0.0);
      auto step = [&](int ctx, double label) {
        double* c = &c_[ctx * dim];
        double g = (Sigmoid(Dot(w, c, dim)) - label) * lr;
        for (int d = 0; d < dim; ++d) {
          gw[d] += g * c[d];
          c[d] -= g * w[d];
        }
      };
      step(ex.context, 1.0);
      for (int k = 0; k < opt_.negatives; ++k) {
        int n = sampler_.Sample(rng);
        if (n == ex.context) continue;
        step(n, 0.0);
      }
      for (int d = 0; d < dim; ++d) w[d] -= gw[d];
    }
  }

  SgnsOptions opt_;
  size_t nt_, nc_;
  NegativeSampler sampler_;
  std::vector<double> w_, c_;
};

void CheckOptions(const SgnsOptions& o) {
  if (o.dim < 2) Fail(ErrorCode::kInvalidArgument, "embedding dim must be >= 2");
  if (o.negatives < 0) Fail(ErrorCode::kInvalidArgument, "negatives must be >= 0");
  if (o.epochs < 1) Fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (o.learning_rate < 0) Fail(ErrorCode::kInvalidArgument, "learning rate must be >= 0");
}

SgnsResult Finish(Trainer& trainer, const Vocab& tv, const Vocab& cv,
                  const std::vector<Example>& examples, const SgnsOptions& o, const char* mode) {
  SgnsResult r;
  r.epoch_loss = trainer.Run(examples);
  r.targets = trainer.Export(tv.tokens, trainer.w());
  r.contexts = trainer.Export(cv.tokens, trainer.c());
  r.targets.meta = {mode, std::string(mode) == "window" ? o.window : 0, o.epochs, o.seed};
  r.contexts.meta = r.targets.meta;
  return r;
}

}  // namespace

SgnsResult TrainWindowSgns(const std::vector<std::vector<std::string>>& streams,
                           const SgnsOptions& options) {
  CheckOptions(options);
  if (options.window < 1) Fail(ErrorCode::kInvalidArgument, "window must be >= 1");
  std::unordered_map<std::string, int64_t> counts;
  for (const auto& s : streams) {
    for (const auto& t : s) ++counts[t];
  }
  if (counts.empty()) Fail(ErrorCode::kInvalidArgument, "empty token stream");
  Vocab vocab = Vocab::Build(counts, options.min_count);
  if (vocab.tokens.empty()) {
    Fail(ErrorCode::kInvalidArgument, "vocabulary empty after min_count=" +
                                          std::to_string(options.min_count));
  }
  std::vector<Example> examples;
  std::vector<int> ids;
  for (const auto& s : streams) {
    ids.clear();
    for (const auto& t : s) {
      auto it = vocab.index.find(t);
      if (it != vocab.index.end()) ids.push_back(it->second);
    }
    for (auto [i, j] : WindowPairs(ids.size(), options.window)) {
      examples.push_back({ids[i], ids[j]});
    }
  }
  Trainer trainer(vocab, vocab, options);
  return Finish(trainer, vocab, vocab, examples, options, "window");
}

SgnsResult TrainPairSgns(const std::vector<std::pair<std::string, std::string>>& pairs,
                         const SgnsOptions& options) {
  CheckOptions(options);
  std::unordered_map<std::string, int64_t> tc, cc;
  for (const auto& [t, c] : pairs) {
    ++tc[t];
    ++cc[c];
  }
  if (tc.empty()) Fail(ErrorCode::kInvalidArgument, "no training pairs");
  Vocab tv = Vocab::Build(tc, options.min_count);
  Vocab cv = Vocab::Build(cc, options.min_count);
  if (tv.tokens.empty() || cv.tokens.empty()) {
    Fail(ErrorCode::kInvalidArgument, "vocabulary empty after min_count=" +
                                          std::to_string(options.min_count));
  }
  std::vector<Example> examples;
  for (const auto& [t, c] : pairs) {
    auto a = tv.index.find(t);
    auto b = cv.index.find(c);
    if (a != tv.index.end() && b != cv.index.end()) examples.push_back({a->second, b->second});
  }
  Trainer trainer(tv, cv, options);
  return Finish(trainer, tv, cv, examples, options, "pair");
}

double SgnsLoss(std::span<const double> w, std::span<const double> c,
                const std::vector<std::span<const double>>& negatives,
                std::vector<double>* grad_w, std::vector<double>* grad_c,
                std::vector<std::vector<double>>* grad_negatives) {
  const int dim = static_cast<int>(w.size());
  if (grad_w) grad_w->assign(dim, 0.0);
  if (grad_negatives) grad_negatives->assign(negatives.size(), std::vector<double>(dim, 0.0));
  double s = Dot(w.data(), c.data(), dim);
  double loss = -LogSigmoid(s);
  double g = Sigmoid(s) - 1.0;
  if (grad_c) {
    grad_c->assign(dim, 0.0);
    for (int d = 0; d < dim; ++d) (*grad_c)[d] = g * w[d];
  }
  if (grad_w) {
    for (int d = 0; d < dim; ++d) (*grad_w)[d] += g * c[d];
  }
  for (size_t k = 0; k < negatives.size(); ++k) {
    const auto& n = negatives[k];
    double sn = Dot(w.data(), n.data(), dim);
    loss -= LogSigmoid(-sn);
    double gn = Sigmoid(sn);
    for (int d = 0; d < dim; ++d) {
      if (grad_w) (*grad_w)[d] += gn * n[d];
      if (grad_negatives) (*grad_negatives)[k][d] = gn * w[d];
    }
  }
  return loss;
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kInvalidArgument, "cosine of vectors with different dims");
  }
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) Fail(ErrorCode::kInvalidArgument, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

IdfTable IdfTable::Build(const std::vector<std::vector<std::string>>& docs) {
  IdfTable t;
  t.num_docs_ = docs.size();
  for (const auto& d : docs) {
    std::unordered_set<std::string> seen(d.begin(), d.end());
    for (const auto& w : seen) ++t.df_[w];
  }
  return t;
}

double IdfTable::Idf(std::string_view token) const {
  auto it = df_.find(std::string(token));
  double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + num_docs_) / (1.0 + df)) + 1.0;
}

DocVector DocEmbedding(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                       const IdfTable& idf) {
  DocVector out;
  out.values.assign(table.dim(), 0.0);
  // Sum in sorted token order so the result is independent of word order.
  std::map<std::string, int> bag;
  for (const auto& t : tokens) ++bag[t];
  for (const auto& [t, n] : bag) {
    auto row = table.Lookup(t);
    if (row.empty()) continue;
    out.empty = false;
    double wgt = n * idf.Idf(t);
    for (int d = 0; d < table.dim(); ++d) out.values[d] += wgt * row[d];
  }
  double norm = 0;
  for (double v : out.values) norm += v * v;
  if (norm == 0) {
    out.empty = true;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  norm = std::sqrt(norm);
  for (double& v : out.values) v /= norm;
  return out;
}

}  // namespace cmt

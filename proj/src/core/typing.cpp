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

#include "core/typing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace cmt {

const char* EncoderKindName(EncoderKind k) {
  return k == EncoderKind::kMean ? "mean" : "recurrent";
}

EncoderKind ParseEncoderKind(std::string_view name) {
  std::string lower = AsciiLower(name);
  if (lower == "mean") return EncoderKind::kMean;
  if (lower == "recurrent" || lower == "lstm") return EncoderKind::kRecurrent;
  if (lower == "cnn") {
    Fail(ErrorCode::kInvalidArgument, "encoder kind 'cnn' is not supported (use mean or recurrent)");
  }
  Fail(ErrorCode::kInvalidArgument, "unknown encoder kind '" + std::string(name) + "'");
}

struct TypingModel::Bank {
  std::string name;
  std::vector<std::string> tokens;  // row order; unknown row is last
  std::unordered_map<std::string, int> index;
  int dim = 0;
  nn::Tensor table;

  int Row(const std::string& t) const {
    auto it = index.find(t);
    return it == index.end() ? static_cast<int>(tokens.size()) : it->second;
  }
};

struct TypingModel::Channel {
  enum Slot { kLeft, kSurface, kSurface2, kRight } slot;
  int bank = 0;
  bool bidirectional = false;
  bool reverse = false;
  // mean encoder
  nn::Tensor a_w, a_b;
  // recurrent encoder
  nn::Lstm fwd, bwd;
  int width = 0;
};

struct TypingModel::Forward {
  struct ChannelState {
    std::vector<int> rows;
    std::vector<nn::Vec> inputs;  // after input dropout
    std::vector<nn::Vec> masks;
    nn::Lstm::Cache fwd_cache, bwd_cache;
    nn::Vec mean, out;
  };
  std::vector<ChannelState> channels;
  nn::Vec concat, concat_mask, dropped, probs;
};

namespace {

std::vector<std::string> Truncate(const std::vector<std::string>& toks, int max, bool keep_tail) {
  if (static_cast<int>(toks.size()) <= max) return toks;
  if (keep_tail) return {toks.end() - max, toks.end()};
  return {toks.begin(), toks.begin() + max};
}

}  // namespace

TypingModel::TypingModel(const TypingConfig& config, const TypingTables& tables, uint64_t seed)
    : config_(config) {
  if (config.num_classes < 2) Fail(ErrorCode::kInvalidArgument, "typing model needs >= 2 classes");
  if (config.hidden < 1) Fail(ErrorCode::kInvalidArgument, "hidden width must be >= 1");
  if (config.dropout < 0 || config.dropout >= 1) {
    Fail(ErrorCode::kInvalidArgument, "dropout must be in [0, 1)");
  }
  if (config.emb_dim < 1) Fail(ErrorCode::kInvalidArgument, "emb_dim must be >= 1");
  Build(seed, tables);
}

TypingModel::TypingModel() = default;
TypingModel::~TypingModel() = default;

int TypingModel::AddBank(const std::string& name, const EmbeddingTable* table,
                         const std::vector<std::vector<std::string>>& vocab) {
  auto bank = std::make_unique<Bank>();
  bank->name = name;
  if (table) {
    if (table->size() == 0 || table->dim() < 1) {
      Fail(ErrorCode::kInvalidArgument, "embedding table for bank '" + name + "' is empty");
    }
    bank->tokens = table->tokens();
    bank->dim = table->dim();
  } else {
    std::set<std::string> seen;
    for (const auto& v : vocab) seen.insert(v.begin(), v.end());
    bank->tokens.assign(seen.begin(), seen.end());
    bank->dim = config_.emb_dim;
  }
  for (size_t i = 0; i < bank->tokens.size(); ++i) bank->index[bank->tokens[i]] = static_cast<int>(i);
  bank->table = params_.Add("bank." + name, static_cast<int>(bank->tokens.size()) + 1, bank->dim);
  banks_.push_back(std::move(bank));
  return static_cast<int>(banks_.size()) - 1;
}

void TypingModel::Build(uint64_t seed, const TypingTables& tables) {
  std::vector<std::vector<std::string>> ctx, sf;
  if (tables.vocab_source) {
    for (const auto& inst : *tables.vocab_source) {
      ctx.push_back(inst.context.left);
      ctx.push_back(inst.context.right);
      sf.push_back(inst.context.surface);
    }
  }
  int ctx_bank = AddBank("context", tables.context, ctx);
  int sf_bank = AddBank("surface", tables.surface, sf);
  int sf2_bank = config_.surface2 ? AddBank("surface2", tables.surface2, sf) : -1;

  const int H = config_.hidden;
  auto add_channel = [&](Channel::Slot slot, const std::string& name, int bank, bool bi,
                         bool reverse) {
    auto ch = std::make_unique<Channel>();
    ch->slot = slot;
    ch->bank = bank;
    ch->reverse = reverse;
    const int D = banks_[bank]->dim;
    if (config_.encoder == EncoderKind::kMean) {
      ch->a_w = params_.Add(name + ".mean.W", H, D);
      ch->a_b = params_.Add(name + ".mean.b", H, 1);
      ch->width = H;
    } else {
      ch->bidirectional = bi;
      ch->fwd = nn::Lstm(&params_, name + ".fwd", D, H);
      if (bi) ch->bwd = nn::Lstm(&params_, name + ".bwd", D, H);
      ch->width = bi ? 2 * H : H;
    }
    concat_width_ += ch->width;
    channels_.push_back(std::move(ch));
  };
  add_channel(Channel::kLeft, "left", ctx_bank, false, false);
  add_channel(Channel::kSurface, "surface", sf_bank, true, false);
  if (sf2_bank >= 0) add_channel(Channel::kSurface2, "surface2", sf2_bank, true, false);
  add_channel(Channel::kRight, "right", ctx_bank, false, true);
  out_w_ = params_.Add("out.W", config_.num_classes, concat_width_);
  out_b_ = params_.Add("out.b", config_.num_classes, 1);
  class_ids_.resize(config_.num_classes);
  std::iota(class_ids_.begin(), class_ids_.end(), 0);

  // Initialization.
  std::mt19937_64 rng(seed);
  const EmbeddingTable* pretrained[] = {tables.context, tables.surface,
                                        config_.surface2 ? tables.surface2 : nullptr};
  for (size_t b = 0; b < banks_.size(); ++b) {
    Bank& bank = *banks_[b];
    params_.InitUniform(bank.table, 0.1, rng);
    if (pretrained[b]) {
      double* w = params_.W(bank.table);
      for (size_t i = 0; i < bank.tokens.size(); ++i) {
        auto row = pretrained[b]->Row(i);
        std::copy(row.begin(), row.end(), w + i * bank.dim);
      }
    }
  }
  for (const auto& ch : channels_) {
    if (config_.encoder == EncoderKind::kMean) {
      params_.InitUniform(ch->a_w, 1.0 / std::sqrt(static_cast<double>(banks_[ch->bank]->dim)), rng);
    } else {
      ch->fwd.Init(&params_, rng);
      if (ch->bidirectional) ch->bwd.Init(&params_, rng);
    }
  }
  params_.InitUniform(out_w_, 1.0 / std::sqrt(static_cast<double>(concat_width_)), rng);
}

int TypingModel::ClassIndex(int cluster) const {
  for (size_t i = 0; i < class_ids_.size(); ++i) {
    if (class_ids_[i] == cluster) return static_cast<int>(i);
  }
  Fail(ErrorCode::kContract, "label " + std::to_string(cluster) + " outside the class index (" +
                                 std::to_string(class_ids_.size()) + " classes)");
}

double TypingModel::RunForward(const ContextWindow& w, std::mt19937_64* rng, Forward* fw) const {
  if (w.format != config_.format()) {
    Fail(ErrorCode::kContract, std::string(FlavorName(config_.flavor)) + " typing model expects " +
                                   FormatName(config_.format()) + " windows, got " +
                                   FormatName(w.format));
  }
  const double p = rng ? config_.dropout : 0.0;
  fw->channels.assign(channels_.size(), {});
  fw->concat.clear();
  for (size_t c = 0; c < channels_.size(); ++c) {
    const Channel& ch = *channels_[c];
    const Bank& bank = *banks_[ch.bank];
    auto& st = fw->channels[c];
    std::vector<std::string> toks;
    switch (ch.slot) {
      case Channel::kLeft: toks = Truncate(w.left, config_.max_tokens, true); break;
      case Channel::kSurface:
      case Channel::kSurface2: toks = Truncate(w.surface, config_.max_tokens, false); break;
      case Channel::kRight: toks = Truncate(w.right, config_.max_tokens, false); break;
    }
    if (ch.reverse) std::reverse(toks.begin(), toks.end());
    const double* table = params_.W(bank.table);
    for (const auto& t : toks) {
      int row = bank.Row(t);
      st.rows.push_back(row);
      nn::Vec x(table + static_cast<size_t>(row) * bank.dim, table + static_cast<size_t>(row + 1) * bank.dim);
      nn::Vec mask = rng ? nn::DropoutMask(x.size(), p, *rng) : nn::Vec(x.size(), 1.0);
      for (size_t d = 0; d < x.size(); ++d) x[d] *= mask[d];
      st.inputs.push_back(std::move(x));
      st.masks.push_back(std::move(mask));
    }
    st.out.assign(ch.width, 0.0);
    if (!st.inputs.empty()) {
      if (config_.encoder == EncoderKind::kMean) {
        st.mean.assign(bank.dim, 0.0);
        for (const auto& x : st.inputs) {
          for (int d = 0; d < bank.dim; ++d) st.mean[d] += x[d];
        }
        for (double& v : st.mean) v /= st.inputs.size();
        nn::Affine(params_, ch.a_w, ch.a_b, st.mean, &st.out);
        for (double& v : st.out) v = std::tanh(v);
      } else {
        nn::Vec hf = ch.fwd.Forward(params_, st.inputs, &st.fwd_cache);
        std::copy(hf.begin(), hf.end(), st.out.begin());
        if (ch.bidirectional) {
          std::vector<nn::Vec> rev(st.inputs.rbegin(), st.inputs.rend());
          nn::Vec hb = ch.bwd.Forward(params_, rev, &st.bwd_cache);
          std::copy(hb.begin(), hb.end(), st.out.begin() + ch.fwd.hidden());
        }
      }
    }
    fw->concat.insert(fw->concat.end(), st.out.begin(), st.out.end());
  }
  fw->concat_mask = rng ? nn::DropoutMask(fw->concat.size(), p, *rng) : nn::Vec(fw->concat.size(), 1.0);
  fw->dropped = fw->concat;
  for (size_t i = 0; i < fw->dropped.size(); ++i) fw->dropped[i] *= fw->concat_mask[i];
  nn::Affine(params_, out_w_, out_b_, fw->dropped, &fw->probs);
  nn::SoftmaxInPlace(&fw->probs);
  return 0.0;
}

void TypingModel::RunBackward(const Forward& fw, int target, double scale) {
  nn::Vec dlogits = fw.probs;
  dlogits[target] -= 1.0;
  for (double& v : dlogits) v *= scale;
  nn::Vec dconcat(concat_width_, 0.0);
  nn::AffineBackward(&params_, out_w_, out_b_, fw.dropped, dlogits, &dconcat);
  for (size_t i = 0; i < dconcat.size(); ++i) dconcat[i] *= fw.concat_mask[i];
  size_t offset = 0;
  for (size_t c = 0; c < channels_.size(); ++c) {
    const Channel& ch = *channels_[c];
    const Bank& bank = *banks_[ch.bank];
    const auto& st = fw.channels[c];
    std::span<const double> dout(dconcat.data() + offset, ch.width);
    offset += ch.width;
    if (st.inputs.empty()) continue;
    std::vector<nn::Vec> dxs(st.inputs.size(), nn::Vec(bank.dim, 0.0));
    if (config_.encoder == EncoderKind::kMean) {
      nn::Vec dpre(ch.width);
      for (int h = 0; h < ch.width; ++h) dpre[h] = dout[h] * (1.0 - st.out[h] * st.out[h]);
      nn::Vec dmean(bank.dim, 0.0);
      nn::AffineBackward(&params_, ch.a_w, ch.a_b, st.mean, dpre, &dmean);
      for (auto& dx : dxs) {
        for (int d = 0; d < bank.dim; ++d) dx[d] = dmean[d] / st.inputs.size();
      }
    } else {
      const int H = ch.fwd.hidden();
      std::vector<nn::Vec> df;
      ch.fwd.Backward(&params_, st.fwd_cache, dout.subspan(0, H), &df);
      for (size_t t = 0; t < dxs.size(); ++t) {
        for (int d = 0; d < bank.dim; ++d) dxs[t][d] += df[t][d];
      }
      if (ch.bidirectional) {
        std::vector<nn::Vec> db;
        ch.bwd.Backward(&params_, st.bwd_cache, dout.subspan(H, H), &db);
        const size_t T = dxs.size();
        for (size_t t = 0; t < T; ++t) {
          for (int d = 0; d < bank.dim; ++d) dxs[T - 1 - t][d] += db[t][d];
        }
      }
    }
    double* g = params_.G(bank.table);
    for (size_t t = 0; t < dxs.size(); ++t) {
      double* row = g + static_cast<size_t>(st.rows[t]) * bank.dim;
      for (int d = 0; d < bank.dim; ++d) row[d] += dxs[t][d] * st.masks[t][d];
    }
  }
}

std::vector<double> TypingModel::Predict(const ContextWindow& window) const {
  Forward fw;
  RunForward(window, nullptr, &fw);
  return fw.probs;
}

double TypingModel::Loss(const std::vector<const TypingInstance*>& batch, bool grad,
                         std::mt19937_64* rng) {
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / batch.size();
  double total = 0;
  Forward fw;
  for (const TypingInstance* inst : batch) {
    int target = ClassIndex(inst->label);
    RunForward(inst->context, rng, &fw);
    total -= std::log(std::max(fw.probs[target], 1e-300));
    if (grad) RunBackward(fw, target, scale);
  }
  return total * scale;
}

void TypingModel::Save(const std::string& path) const {
  auto out = OpenArtifact(path, "typing-model");
  out << "config flavor=" << FlavorName(config_.flavor) << " classes=" << config_.num_classes
      << " encoder=" << EncoderKindName(config_.encoder) << " hidden=" << config_.hidden
      << " dropout=" << config_.dropout << " surface2=" << (config_.surface2 ? 1 : 0)
      << " max_tokens=" << config_.max_tokens << " emb_dim=" << config_.emb_dim << '\n';
  out << "classes";
  for (int c : class_ids_) out << ' ' << c;
  out << '\n';
  for (const auto& b : banks_) {
    out << "bank " << b->name << ' ' << b->tokens.size() << ' ' << b->dim << '\n';
    for (const auto& t : b->tokens) out << t << '\n';
  }
  params_.Save(out);
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::unique_ptr<TypingModel> TypingModel::Load(const std::string& path) {
  LineReader reader(path, "typing-model");
  std::string line;
  if (!reader.Next(&line) || !StartsWith(line, "config ")) reader.Error("missing config line");
  TypingConfig cfg;
  for (const auto& kv : SplitWords(line.substr(7))) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) reader.Error("bad config entry '" + kv + "'");
    std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "flavor") cfg.flavor = ParseFlavor(v);
    else if (k == "classes") cfg.num_classes = static_cast<int>(ParseInt(v, path));
    else if (k == "encoder") cfg.encoder = ParseEncoderKind(v);
    else if (k == "hidden") cfg.hidden = static_cast<int>(ParseInt(v, path));
    else if (k == "dropout") cfg.dropout = ParseDouble(v, path);
    else if (k == "surface2") cfg.surface2 = v == "1";
    else if (k == "max_tokens") cfg.max_tokens = static_cast<int>(ParseInt(v, path));
    else if (k == "emb_dim") cfg.emb_dim = static_cast<int>(ParseInt(v, path));
    else reader.Error("unknown config key '" + k + "'");
  }
  if (!reader.Next(&line) || !StartsWith(line, "classes")) reader.Error("missing classes line");
  std::vector<int> classes;
  for (const auto& c : SplitWords(line.substr(7))) classes.push_back(static_cast<int>(ParseInt(c, path)));
  if (static_cast<int>(classes.size()) != cfg.num_classes) reader.Error("class count mismatch");

  // Rebuild the layout from the stored bank vocabularies.
  std::vector<EmbeddingTable> tables;
  const int num_banks = cfg.surface2 ? 3 : 2;
  for (int b = 0; b < num_banks; ++b) {
    if (!reader.Next(&line)) reader.Error("missing bank header");
    auto head = SplitWords(line);
    if (head.size() != 4 || head[0] != "bank") reader.Error("expected 'bank name size dim'");
    int64_t n = ParseInt(head[2], path), dim = ParseInt(head[3], path);
    EmbeddingTable t(static_cast<int>(dim));
    std::vector<double> zeros(dim, 0.0);
    for (int64_t i = 0; i < n; ++i) {
      if (!reader.Next(&line)) reader.Error("truncated bank '" + head[1] + "'");
      t.Add(line, zeros);
    }
    tables.push_back(std::move(t));
  }
  TypingTables tt;
  tt.context = &tables[0];
  tt.surface = &tables[1];
  tt.surface2 = cfg.surface2 ? &tables[2] : nullptr;
  std::unique_ptr<TypingModel> model(new TypingModel(cfg, tt, 0));
  model->class_ids_ = classes;
  std::stringstream rest;
  while (reader.Next(&line)) rest << line << '\n';
  model->params_.Load(rest, path);
  return model;
}

TypingEval EvaluateTyping(const TypingModel& model, const std::vector<TypingInstance>& data) {
  TypingEval e;
  if (data.empty()) return e;
  int correct = 0;
  double loss = 0;
  for (const auto& inst : data) {
    auto probs = model.Predict(inst.context);
    int target = model.ClassIndex(inst.label);
    int arg = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    correct += arg == target;
    loss -= std::log(std::max(probs[target], 1e-300));
  }
  e.micro_f1 = static_cast<double>(correct) / data.size();
  e.avg_loss = loss / data.size();
  return e;
}

std::vector<TypingEpoch> TrainTyping(TypingModel* model, const std::vector<TypingInstance>& train,
                                     const std::vector<TypingInstance>& dev,
                                     const TypingHyperparams& hp) {
  if (train.empty()) Fail(ErrorCode::kInvalidArgument, "empty typing training set");
  if (hp.batch_size < 1) Fail(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  for (const auto& inst : train) model->ClassIndex(inst.label);
  for (const auto& inst : dev) model->ClassIndex(inst.label);
  nn::NesterovSgd opt({hp.learning_rate, hp.momentum, hp.weight_decay, hp.clip_norm});
  std::mt19937_64 rng(hp.seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TypingEpoch> history;
  std::vector<double> best = model->params().values();
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (size_t start = 0; start < order.size(); start += hp.batch_size) {
      std::vector<const TypingInstance*> batch;
      for (size_t i = start; i < std::min(order.size(), start + hp.batch_size); ++i) {
        batch.push_back(&train[order[i]]);
      }
      model->params().ZeroGrad();
      total += model->Loss(batch, true, &rng) * batch.size();
      opt.Step(&model->params());
    }
    TypingEpoch e;
    e.epoch = epoch;
    e.train_loss = total / train.size();
    TypingEval ev = EvaluateTyping(*model, dev.empty() ? train : dev);
    e.dev_loss = ev.avg_loss;
    e.dev_micro_f1 = ev.micro_f1;
    history.push_back(e);
    if (e.dev_loss < best_loss) {
      best_loss = e.dev_loss;
      best = model->params().values();
      stale = 0;
    } else if (hp.patience > 0 && ++stale >= hp.patience) {
      break;
    }
  }
  model->params().values() = best;
  return history;
}

}  // namespace cmt

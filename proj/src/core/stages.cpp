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

#include "core/stages.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <random>
#include <set>

#include "core/candgen.hpp"
#include "core/clustering.hpp"
#include "core/common.hpp"
#include "core/contexts.hpp"
#include "core/corpus.hpp"
#include "core/embeddings.hpp"
#include "core/eval.hpp"
#include "core/features.hpp"
#include "core/ranker.hpp"
#include "core/synth.hpp"
#include "core/typing.hpp"

namespace cmt {

namespace {

// ---- option tables ---------------------------------------------------------

StageOption Req(std::string key, std::string help) { return {std::move(key), std::move(help), std::nullopt}; }
StageOption Opt(std::string key, std::string help, std::string def) {
  return {std::move(key), std::move(help), std::move(def)};
}

std::vector<StageOption> ResourceOptions() {
  return {
      Req("corpus", "corpus to rank"),
      Req("candidates", "candidate dump of the corpus"),
      Req("kb", "knowledge base"),
      Opt("types", "synset -> coarse type mapping", ""),
      Req("surface-forms", "surface-form store"),
      Req("clusterings", "comma-separated clusterings, one per typing flavor"),
      Req("typing-models", "comma-separated typing models (the Entity model feeds stage 2)"),
      Opt("flavors", "stage-1 typing flavors (default: the non-Entity models)", ""),
      Opt("entity-vectors", "entity embeddings for max_cos_sim_in_context", ""),
      Opt("word-vectors", "word embeddings for document similarity", ""),
      Opt("reference-corpus", "corpus whose sentences form entity pseudo-documents", ""),
      Opt("context-top-n", "N of the top-N x M context window", "3"),
      Opt("context-window", "M of the top-N x M context window", "5"),
      Opt("raw-doc-sim", "add the raw doc_sim slot", "false"),
      Opt("first-names", "first-name lexicon", ""),
      Opt("surnames", "surname lexicon", ""),
  };
}

template <typename... Parts>
std::vector<StageOption> Concat(Parts... parts) {
  std::vector<StageOption> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

std::vector<StageInfo> BuildStageTable() {
  std::vector<StageInfo> t = {
      {"ingest", "validate and normalize KB, surface forms and corpus",
       {Req("kb", "KB TSV"), Opt("types", "synset -> coarse type mapping", ""),
        Req("surface-forms", "surface-form TSV"), Opt("corpus", "annotated corpus", ""),
        Opt("auto-annotate", "propagate manual annotations within documents", "false"),
        Req("out-kb", "normalized KB"), Req("out-surface-forms", "normalized surface forms"),
        Opt("out-corpus", "normalized corpus (required with --corpus)", "")}},
      {"mine-coocc", "count same-document entity pairs",
       {Req("corpus", "annotated corpus"), Req("out", "cooccurrence table")}},
      {"build-streams", "embedding inputs: wc, ec, cluster-centric streams; sfc, synset, sf-word pairs",
       {Req("kind", "wc | ec | sfc | synset | cluster-centric | sf-word"),
        Opt("corpus", "annotated corpus (wc, ec, sfc, cluster-centric)", ""),
        Opt("kb", "knowledge base (synset)", ""), Opt("types", "type mapping", ""),
        Opt("synset-filter", "comma-separated synsets to drop (synset)", ""),
        Opt("clustering", "clustering (cluster-centric, sf-word)", ""),
        Opt("surface-forms", "surface forms (sf-word)", ""), Req("out", "stream or pair file")}},
      {"embed", "skip-gram with negative sampling",
       {Req("input", "stream file (window mode) or pair file (pair mode)"),
        Opt("mode", "window | pair", "window"), Opt("dim", "vector size", "300"),
        Opt("window", "context window (window mode)", "2"), Opt("negatives", "negative samples", "5"),
        Opt("epochs", "passes over the data", "5"), Opt("min-count", "minimum token count", "1"),
        Opt("learning-rate", "initial learning rate", "0.025"),
        Opt("loss-sample", "pairs in the frozen loss sample", "2000"), Req("out", "target vectors"),
        Opt("out-contexts", "context vectors", ""), Opt("log-out", "per-epoch loss TSV", "")}},
      {"cluster", "k-means over embeddings or Brown over entity streams",
       {Opt("method", "kmeans | brown", "kmeans"), Req("flavor", "Word | Surface | Entity | Synset | Brown"),
        Req("k", "number of clusters"), Opt("embeddings", "entity vectors (kmeans)", ""),
        Opt("streams", "entity streams (brown)", ""), Opt("kb", "restrict to KB entities", ""),
        Opt("max-iterations", "k-means iteration cap", "50"),
        Opt("restarts", "k-means++ restarts", "3"), Req("out", "clustering"),
        Opt("log-out", "k-means iteration log TSV", "")}},
      {"agccs", "average gold candidate cluster size per clustering",
       {Req("corpus", "annotated corpus"), Req("candidates", "candidate dump"),
        Req("clusterings", "comma-separated clusterings"), Opt("out", "TSV report", "")}},
      {"select-combo", "rank clustering combinations by the typing-confusion penalty",
       {Req("corpus", "annotated corpus"), Req("candidates", "candidate dump"),
        Req("variants", "comma-separated name=clustering:typing-model"),
        Opt("top", "combinations to keep", "10"), Req("out", "TSV ranking")}},
      {"build-typing-data", "distant-supervision typing dataset",
       {Req("corpus", "annotated corpus"), Req("clustering", "cluster-based types"),
        Opt("format", "WC | SFC | EC (default: from the clustering flavor)", ""),
        Opt("min-sentence-words", "WC sentence filter, lower bound", "10"),
        Opt("max-sentence-words", "WC sentence filter, upper bound", "50"), Req("out", "typing dataset")}},
      {"train-typing", "train a mention typing model",
       {Req("train", "typing dataset"), Opt("dev", "held-out typing dataset", ""),
        Opt("dev-fraction", "hold out this share of --train when --dev is absent", "0"),
        Req("flavor", "typing flavor"), Opt("classes", "number of classes (default: from labels)", ""),
        Opt("encoder", "mean | recurrent", "recurrent"), Opt("hidden", "encoder output width", "600"),
        Opt("dropout", "dropout probability", "0.5"), Opt("surface2", "W_SF surface channel", "true"),
        Opt("max-tokens", "tokens per side", "50"), Opt("emb-dim", "embedding size without tables", "50"),
        Opt("context-vectors", "pretrained left/right table", ""),
        Opt("surface-vectors", "pretrained surface table", ""),
        Opt("surface2-vectors", "pretrained second surface table", ""),
        Opt("learning-rate", "SGD learning rate", "0.1"), Opt("momentum", "Nesterov momentum", "0.9"),
        Opt("weight-decay", "L2 decay", "1.2e-6"), Opt("clip", "global gradient-norm clip", "2.0"),
        Opt("batch", "batch size", "200"), Opt("epochs", "maximum epochs", "20"),
        Opt("patience", "early-stopping patience (0 disables)", "3"), Req("out", "typing model"),
        Opt("history-out", "per-epoch TSV", "")}},
      {"predict-typing", "typing distributions for a dataset",
       {Req("typing-model", "typing model"), Req("dataset", "typing dataset"), Req("out", "predictions TSV")}},
      {"candgen", "candidate generation for every mention",
       {Req("corpus", "annotated corpus"), Req("kb", "knowledge base"), Opt("types", "type mapping", ""),
        Req("surface-forms", "surface forms"), Opt("coocc", "cooccurrence table", ""),
        Opt("trigram-threshold", "T", "0.60"), Opt("edit-ratio", "E", "0.25"), Opt("min-words", "W", "2"),
        Opt("max-word-diff", "D", "1"), Opt("top-n", "N", "100"),
        Opt("coocc-top-r", "cooccurrence neighbours per entity", "20"),
        Opt("first-names", "first-name lexicon", ""), Opt("surnames", "surname lexicon", ""),
        Req("out", "candidate dump")}},
      {"features", "ranking feature table with gold labels",
       Concat(ResourceOptions(),
              std::vector<StageOption>{Opt("stage", "1 or 2", "1"),
                                       Opt("stage1-model", "stage-1 ranker (stage 2)", ""),
                                       Req("out", "feature table")})},
      {"train-ranker", "train a stage-1 or stage-2 ranker",
       {Req("features", "training feature table"), Opt("dev-features", "dev feature table", ""),
        Opt("hidden", "hidden widths", "500,300"), Opt("dropout", "dropout per hidden layer", "0.1,0.7"),
        Opt("learning-rate", "SGD learning rate", "0.05"), Opt("momentum", "Nesterov momentum", "0.9"),
        Opt("weight-decay", "L2 decay", "0"), Opt("clip", "global gradient-norm clip (0 disables)", "0"),
        Opt("batch", "batch size", "400"), Opt("epochs", "maximum epochs", "20"),
        Opt("patience", "early-stopping patience (0 disables)", "5"),
        Opt("negatives-per-mention", "negatives kept per mention (0 keeps all)", "0"),
        Req("out", "ranker model"), Opt("history-out", "per-epoch TSV", "")}},
      {"rank", "two-stage ranking",
       Concat(ResourceOptions(),
              std::vector<StageOption>{Req("stage1-model", "stage-1 ranker"),
                                       Opt("stage2-model", "stage-2 ranker", ""),
                                       Opt("threshold", "abstain below this score", "0.03"),
                                       Req("out", "final predictions"),
                                       Opt("out-stage1", "stage-1 predictions", "")})},
      {"evaluate", "micro P/R/F1, BoT-F1, InKB accuracy and gold recall",
       {Req("corpus", "gold corpus"), Req("predictions", "predictions TSV"),
        Opt("name", "dataset label (default: corpus file stem)", ""),
        Opt("candidates", "candidate dump for gold recall", ""), Opt("top-n", "gold recall cut", "100"),
        Opt("out", "report TSV", "")}},
      {"randtest", "paired approximate randomization test on micro-F1",
       {Req("corpus", "gold corpus"), Req("predictions-a", "system A"), Req("predictions-b", "system B"),
        Opt("rounds", "shuffles", "10000"), Opt("out", "p-value file", "")}},
      {"synth-fixture", "deterministic synthetic KB and corpus",
       {Req("out-dir", "output directory"), Opt("topics", "topics", "5"),
        Opt("ambiguous-surfaces", "homonymous surfaces", "10"), Opt("senses", "entities per homonym", "3"),
        Opt("unambiguous", "single-sense entities", "20"), Opt("train-docs", "training documents", "200"),
        Opt("test-docs", "test documents", "50"), Opt("topic-words", "vocabulary per topic", "40"),
        Opt("sentences", "sentences per document", "4"), Opt("off-topic", "off-topic word rate", "0.1")}},
      {"report", "aggregate evaluation TSVs",
       {Req("reports", "comma-separated report TSVs"), Opt("out", "aggregated TSV", ""),
        Opt("out-text", "aligned text table", ""),
        Opt("out-summary", "mean and sd per dataset name over repeated runs (TSV)", "")}},
  };
  for (auto& s : t) {
    s.options.push_back(Opt("seed", "random seed", "1"));
    s.options.push_back(Opt("deterministic", "single-threaded, reproducible execution", "true"));
    s.options.push_back(Opt("jobs", "worker threads when not deterministic", "1"));
  }
  return t;
}

// Which stage writes the artifact behind an input option.
const char* Producer(const std::string& key) {
  static const std::map<std::string, const char*> kProducers = {
      {"corpus", "ingest"},           {"reference-corpus", "ingest"}, {"kb", "ingest"},
      {"surface-forms", "ingest"},    {"types", "ingest"},            {"coocc", "mine-coocc"},
      {"input", "build-streams"},     {"streams", "build-streams"},   {"embeddings", "embed"},
      {"entity-vectors", "embed"},    {"word-vectors", "embed"},      {"context-vectors", "embed"},
      {"surface-vectors", "embed"},   {"surface2-vectors", "embed"},  {"clustering", "cluster"},
      {"clusterings", "cluster"},     {"train", "build-typing-data"}, {"dev", "build-typing-data"},
      {"dataset", "build-typing-data"}, {"typing-model", "train-typing"},
      {"typing-models", "train-typing"}, {"variants", "train-typing"}, {"candidates", "candgen"},
      {"features", "features"},       {"dev-features", "features"},   {"stage1-model", "train-ranker"},
      {"stage2-model", "train-ranker"}, {"predictions", "rank"},      {"predictions-a", "rank"},
      {"predictions-b", "rank"},      {"reports", "evaluate"},
  };
  auto it = kProducers.find(key);
  return it == kProducers.end() ? nullptr : it->second;
}

// ---- argument access -------------------------------------------------------

class Args {
 public:
  Args(const StageInfo& info, const StageArgs& values) : info_(info), values_(values) {
    for (const auto& [k, v] : values) {
      if (!Find(k)) Fail(ErrorCode::kInvalidArgument, "unknown option --" + k + " for `" + info.name + "`");
    }
  }

  std::string Str(const std::string& key) const {
    const StageOption* o = Find(key);
    if (!o) Fail(ErrorCode::kInternal, "stage `" + info_.name + "` reads undeclared option " + key);
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    if (!o->default_value) Fail(ErrorCode::kInvalidArgument, "`" + info_.name + "` needs --" + key);
    return *o->default_value;
  }
  bool Has(const std::string& key) const { return !Str(key).empty(); }
  int64_t Int(const std::string& key) const { return ParseInt(Str(key), "--" + key); }
  double Double(const std::string& key) const { return ParseDouble(Str(key), "--" + key); }
  bool Bool(const std::string& key) const {
    std::string v = AsciiLower(Str(key));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    Fail(ErrorCode::kInvalidArgument, "--" + key + " expects true or false, got '" + v + "'");
  }
  std::vector<std::string> List(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& p : Split(Str(key), ',')) {
      std::string t = Trim(p);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }
  // Existing input path; a missing file names the stage that produces it.
  std::string Input(const std::string& key) const { return CheckInput(key, Str(key)); }
  std::vector<std::string> Inputs(const std::string& key) const {
    auto paths = List(key);
    for (const auto& p : paths) CheckInput(key, p);
    return paths;
  }
  std::string CheckInput(const std::string& key, const std::string& path) const {
    if (path.empty()) Fail(ErrorCode::kInvalidArgument, "`" + info_.name + "` needs --" + key);
    if (!FileExists(path)) {
      const char* producer = Producer(key);
      Fail(ErrorCode::kMissingArtifact,
           "missing artifact for --" + key + ": '" + path + "' does not exist" +
               (producer ? std::string(" (produced by `cmtned ") + producer + "`)" : std::string()));
    }
    return path;
  }
  uint64_t Seed() const { return static_cast<uint64_t>(Int("seed")); }
  int Jobs() const { return Bool("deterministic") ? 1 : std::max<int>(1, static_cast<int>(Int("jobs"))); }

 private:
  const StageOption* Find(const std::string& key) const {
    for (const auto& o : info_.options) {
      if (o.key == key) return &o;
    }
    return nullptr;
  }
  const StageInfo& info_;
  const StageArgs& values_;
};

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

TypeMapping LoadTypes(const Args& a) {
  return a.Has("types") ? TypeMapping::Load(a.Input("types")) : TypeMapping{};
}

std::vector<GoldCandidates> GoldCandidateList(const std::vector<Document>& docs,
                                              const std::vector<DocumentCandidates>& cands) {
  std::vector<GoldCandidates> out;
  for (size_t d = 0; d < docs.size(); ++d) {
    for (size_t m = 0; m < docs[d].mentions.size(); ++m) {
      if (!docs[d].mentions[m].gold) continue;
      GoldCandidates g;
      g.gold = *docs[d].mentions[m].gold;
      for (const auto& c : cands[d].sets[m]) g.candidates.push_back(c.entity_id);
      out.push_back(std::move(g));
    }
  }
  return out;
}

// ---- stages ----------------------------------------------------------------

void Ingest(const Args& a, const StageLog& log) {
  KnowledgeBase kb = ParseKb(a.Input("kb"), LoadTypes(a));
  SurfaceFormStore store = ParseSurfaceForms(a.Input("surface-forms"));
  WriteKb(a.Str("out-kb"), kb);
  WriteSurfaceForms(a.Str("out-surface-forms"), store);
  log("kb: " + std::to_string(kb.size()) + " entities; surface forms: " +
      std::to_string(store.records().size()) + " records");
  if (!a.Has("corpus")) return;
  if (!a.Has("out-corpus")) Fail(ErrorCode::kInvalidArgument, "`ingest --corpus` needs --out-corpus");
  auto docs = ParseCorpus(a.Input("corpus"));
  size_t manual = 0, total = 0;
  for (auto& d : docs) {
    manual += d.mentions.size();
    if (a.Bool("auto-annotate")) d = AutoAnnotate(d);
    total += d.mentions.size();
  }
  WriteCorpus(a.Str("out-corpus"), docs);
  log("corpus: " + std::to_string(docs.size()) + " documents, " + std::to_string(manual) +
      " mentions, " + std::to_string(total - manual) + " auto-annotated");
}

void MineCoocc(const Args& a, const StageLog& log) {
  auto docs = ParseCorpus(a.Input("corpus"));
  Cooccurrence::Mine(docs).Write(a.Str("out"));
  log("cooccurrence mined from " + std::to_string(docs.size()) + " documents");
}

void BuildStreams(const Args& a, const StageLog& log) {
  const std::string kind = a.Str("kind");
  auto corpus = [&] { return ParseCorpus(a.Input("corpus")); };
  if (kind == "wc" || kind == "ec" || kind == "cluster-centric") {
    auto docs = corpus();
    TokenStreams s;
    if (kind == "wc") {
      s = BuildWcStream(docs);
    } else if (kind == "ec") {
      s = BuildEcStream(docs);
    } else {
      s = BuildClusterCentricStream(docs, ReadClustering(a.Input("clustering")));
    }
    WriteStreams(a.Str("out"), s);
    log(kind + ": " + std::to_string(s.size()) + " streams");
    return;
  }
  TokenPairs pairs;
  if (kind == "sfc") {
    pairs = BuildSfcPairs(corpus());
  } else if (kind == "synset") {
    auto filter = a.List("synset-filter");
    pairs = BuildSynsetPairs(ParseKb(a.Input("kb"), LoadTypes(a)), {filter.begin(), filter.end()});
  } else if (kind == "sf-word") {
    pairs = BuildSfWordPairs(ParseSurfaceForms(a.Input("surface-forms")), ReadClustering(a.Input("clustering")));
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown --kind '" + kind + "'");
  }
  WritePairs(a.Str("out"), pairs);
  log(kind + ": " + std::to_string(pairs.size()) + " pairs");
}

void Embed(const Args& a, const StageLog& log) {
  SgnsOptions o;
  o.dim = static_cast<int>(a.Int("dim"));
  o.window = static_cast<int>(a.Int("window"));
  o.negatives = static_cast<int>(a.Int("negatives"));
  o.epochs = static_cast<int>(a.Int("epochs"));
  o.min_count = static_cast<int>(a.Int("min-count"));
  o.learning_rate = a.Double("learning-rate");
  o.loss_sample = static_cast<int>(a.Int("loss-sample"));
  o.seed = a.Seed();
  o.threads = a.Jobs();
  o.deterministic = a.Bool("deterministic");
  const std::string mode = a.Str("mode");
  SgnsResult r;
  if (mode == "window") {
    r = TrainWindowSgns(ReadStreams(a.Input("input")), o);
  } else if (mode == "pair") {
    r = TrainPairSgns(ReadPairs(a.Input("input")), o);
  } else {
    Fail(ErrorCode::kInvalidArgument, "--mode must be window or pair");
  }
  WriteEmbeddings(a.Str("out"), r.targets);
  if (a.Has("out-contexts")) WriteEmbeddings(a.Str("out-contexts"), r.contexts);
  for (size_t e = 0; e < r.epoch_loss.size(); ++e) {
    log("epoch " + std::to_string(e + 1) + " loss " + Format("%.6f", r.epoch_loss[e]));
  }
  if (a.Has("log-out")) {
    auto out = OpenArtifact(a.Str("log-out"), "embed-log");
    out << "epoch\tloss\n";
    for (size_t e = 0; e < r.epoch_loss.size(); ++e) out << e + 1 << '\t' << Fixed6(r.epoch_loss[e]) << '\n';
  }
  log(std::to_string(r.targets.size()) + " vectors of dim " + std::to_string(r.targets.dim()));
}

void Cluster(const Args& a, const StageLog& log) {
  const Flavor flavor = ParseFlavor(a.Str("flavor"));
  const int k = static_cast<int>(a.Int("k"));
  const std::string method = a.Str("method");
  std::vector<std::string> keep;
  if (a.Has("kb")) {
    KnowledgeBase kb = ParseKb(a.Input("kb"), {});
    for (const auto& e : kb.entities()) keep.push_back(e.id);
  }
  Clustering c;
  if (method == "kmeans") {
    KMeansOptions o;
    o.k = k;
    o.seed = a.Seed();
    o.max_iterations = static_cast<int>(a.Int("max-iterations"));
    o.restarts = static_cast<int>(a.Int("restarts"));
    o.threads = a.Jobs();
    KMeansResult details;
    c = KMeansCluster(ReadEmbeddings(a.Input("embeddings")), flavor, o, keep, &details);
    for (const auto& it : details.log) {
      log("iteration " + std::to_string(it.iteration) + " inertia " + Format("%.6f", it.inertia) +
          " moved " + Format("%.4f", it.changed_fraction));
    }
    if (a.Has("log-out")) {
      auto out = OpenArtifact(a.Str("log-out"), "kmeans-log");
      out << "iteration\tinertia\tchanged_fraction\treseeded\n";
      for (const auto& it : details.log) {
        out << it.iteration << '\t' << Fixed6(it.inertia) << '\t' << Fixed6(it.changed_fraction) << '\t'
            << it.reseeded << '\n';
      }
    }
  } else if (method == "brown") {
    auto streams = ReadStreams(a.Input("streams"));
    if (!keep.empty()) {
      std::set<std::string> ids(keep.begin(), keep.end());
      for (auto& s : streams) s.erase(std::remove_if(s.begin(), s.end(), [&](const std::string& t) { return !ids.count(t); }), s.end());
    }
    c = BrownCluster(streams, k, nullptr);
    c.flavor = flavor;
  } else {
    Fail(ErrorCode::kInvalidArgument, "--method must be kmeans or brown");
  }
  c.Validate();
  WriteClustering(a.Str("out"), c);
  log(std::string(FlavorName(flavor)) + " clustering: " + std::to_string(c.assignment.size()) +
      " entities in " + std::to_string(c.k) + " clusters");
}

void AgccsStage(const Args& a, const StageLog& log) {
  auto docs = ParseCorpus(a.Input("corpus"));
  auto cands = ReadCandidates(a.Input("candidates"), docs);
  auto mentions = GoldCandidateList(docs, cands);
  std::ofstream out;
  if (a.Has("out")) {
    out = OpenArtifact(a.Str("out"), "agccs");
    out << "clustering\tflavor\tk\tagccs\teligible\n";
  }
  for (const auto& path : a.Inputs("clusterings")) {
    Clustering c = ReadClustering(path);
    int eligible = 0;
    double v = Agccs(c, mentions, &eligible);
    log(path + " (" + FlavorName(c.flavor) + ", k=" + std::to_string(c.k) + "): AGCCS " +
        Format("%.4f", v) + " over " + std::to_string(eligible) + " mentions");
    if (out.is_open()) {
      out << path << '\t' << FlavorName(c.flavor) << '\t' << c.k << '\t' << Fixed6(v) << '\t' << eligible << '\n';
    }
  }
}

void SelectCombo(const Args& a, const StageLog& log) {
  auto docs = ParseCorpus(a.Input("corpus"));
  auto cands = ReadCandidates(a.Input("candidates"), docs);
  auto mentions = GoldCandidateList(docs, cands);
  std::vector<VariantProbs> variants;
  for (const auto& entry : a.List("variants")) {
    auto eq = entry.find('='), colon = entry.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos) {
      Fail(ErrorCode::kInvalidArgument, "variant '" + entry + "' is not name=clustering:typing-model");
    }
    Clustering c = ReadClustering(a.CheckInput("clusterings", entry.substr(eq + 1, colon - eq - 1)));
    auto model = TypingModel::Load(a.CheckInput("typing-models", entry.substr(colon + 1)));
    if (model->config().flavor != c.flavor) {
      Fail(ErrorCode::kContract, "variant '" + entry.substr(0, eq) + "': clustering and typing model flavors differ");
    }
    VariantProbs v;
    v.name = entry.substr(0, eq);
    v.flavor = c.flavor;
    for (size_t d = 0; d < docs.size(); ++d) {
      for (size_t m = 0; m < docs[d].mentions.size(); ++m) {
        if (!docs[d].mentions[m].gold) continue;
        auto probs = model->Predict(ExtractContext(docs[d], static_cast<int>(m), model->config().format()));
        std::vector<std::optional<double>> row;
        for (const auto& cand : cands[d].sets[m]) {
          auto cluster = c.Lookup(cand.entity_id);
          if (!cluster) {
            row.push_back(std::nullopt);
            continue;
          }
          Entity e;
          e.id = cand.entity_id;
          e.cluster_types[static_cast<int>(c.flavor)] = cluster;
          row.push_back(CandidateTypingProb(probs, model->class_ids(), &e, c.flavor));
        }
        v.probs.push_back(std::move(row));
      }
    }
    variants.push_back(std::move(v));
  }
  auto ranked = SelectCombinations(variants, mentions, static_cast<int>(a.Int("top")));
  auto out = OpenArtifact(a.Str("out"), "combinations");
  out << "rank\tpenalty\tcombination\n";
  for (size_t i = 0; i < ranked.size(); ++i) {
    out << i + 1 << '\t' << Fixed6(ranked[i].penalty) << '\t' << Join(ranked[i].combo, ",") << '\n';
    log(std::to_string(i + 1) + ". " + Join(ranked[i].combo, ",") + " penalty " + Format("%.6f", ranked[i].penalty));
  }
}

void BuildTypingData(const Args& a, const StageLog& log) {
  auto docs = ParseCorpus(a.Input("corpus"));
  Clustering c = ReadClustering(a.Input("clustering"));
  ContextFormat format = a.Has("format") ? ParseFormat(a.Str("format")) : FormatForFlavor(c.flavor);
  DatasetFilters f;
  f.min_sentence_words = static_cast<int>(a.Int("min-sentence-words"));
  f.max_sentence_words = static_cast<int>(a.Int("max-sentence-words"));
  DatasetStats stats;
  auto data = BuildTypingDataset(docs, c, format, f, &stats);
  WriteTypingDataset(a.Str("out"), format, data);
  log(std::string(FormatName(format)) + " dataset: " + std::to_string(stats.instances) + " instances (skipped " +
      std::to_string(stats.skipped_nil) + " NIL, " + std::to_string(stats.skipped_unclustered) +
      " unclustered, " + std::to_string(stats.skipped_sentence) + " by sentence length)");
}

void TrainTypingStage(const Args& a, const StageLog& log) {
  ContextFormat format;
  auto train = ReadTypingDataset(a.Input("train"), &format);
  std::vector<TypingInstance> dev;
  if (a.Has("dev")) {
    ContextFormat dev_format;
    dev = ReadTypingDataset(a.Input("dev"), &dev_format);
    if (dev_format != format) Fail(ErrorCode::kContract, "train and dev datasets differ in format");
  } else if (double frac = a.Double("dev-fraction"); frac > 0) {
    if (frac >= 1) Fail(ErrorCode::kInvalidArgument, "--dev-fraction must be in [0, 1)");
    std::mt19937_64 rng(a.Seed() ^ 0x5bd1e995ULL);
    std::shuffle(train.begin(), train.end(), rng);
    size_t n = static_cast<size_t>(frac * train.size());
    dev.assign(train.end() - n, train.end());
    train.resize(train.size() - n);
  }
  if (train.empty()) Fail(ErrorCode::kInvalidArgument, "empty typing training set");
  TypingConfig cfg;
  cfg.flavor = ParseFlavor(a.Str("flavor"));
  if (cfg.format() != format) {
    Fail(ErrorCode::kContract, std::string("flavor ") + FlavorName(cfg.flavor) + " needs " +
                                   FormatName(cfg.format()) + " data, got " + FormatName(format));
  }
  int max_label = -1;
  for (const auto* set : {&train, &dev}) {
    for (const auto& i : *set) max_label = std::max(max_label, i.label);
  }
  cfg.num_classes = a.Has("classes") ? static_cast<int>(a.Int("classes")) : max_label + 1;
  cfg.encoder = ParseEncoderKind(a.Str("encoder"));
  cfg.hidden = static_cast<int>(a.Int("hidden"));
  cfg.dropout = a.Double("dropout");
  cfg.surface2 = a.Bool("surface2");
  cfg.max_tokens = static_cast<int>(a.Int("max-tokens"));
  cfg.emb_dim = static_cast<int>(a.Int("emb-dim"));
  EmbeddingTable context, surface, surface2;
  TypingTables tables;
  tables.vocab_source = &train;
  if (a.Has("context-vectors")) tables.context = &(context = ReadEmbeddings(a.Input("context-vectors")));
  if (a.Has("surface-vectors")) tables.surface = &(surface = ReadEmbeddings(a.Input("surface-vectors")));
  if (a.Has("surface2-vectors")) tables.surface2 = &(surface2 = ReadEmbeddings(a.Input("surface2-vectors")));
  TypingModel model(cfg, tables, a.Seed());
  TypingHyperparams hp;
  hp.learning_rate = a.Double("learning-rate");
  hp.momentum = a.Double("momentum");
  hp.weight_decay = a.Double("weight-decay");
  hp.clip_norm = a.Double("clip");
  hp.batch_size = static_cast<int>(a.Int("batch"));
  hp.epochs = static_cast<int>(a.Int("epochs"));
  hp.patience = static_cast<int>(a.Int("patience"));
  hp.seed = a.Seed();
  auto history = TrainTyping(&model, train, dev, hp);
  for (const auto& e : history) {
    log("epoch " + std::to_string(e.epoch) + " train loss " + Format("%.6f", e.train_loss) + " dev loss " +
        Format("%.6f", e.dev_loss) + " dev micro-F1 " + Format("%.4f", e.dev_micro_f1));
  }
  if (a.Has("history-out")) {
    auto out = OpenArtifact(a.Str("history-out"), "typing-history");
    out << "epoch\ttrain_loss\tdev_loss\tdev_micro_f1\n";
    for (const auto& e : history) {
      out << e.epoch << '\t' << Fixed6(e.train_loss) << '\t' << Fixed6(e.dev_loss) << '\t'
          << Fixed6(e.dev_micro_f1) << '\n';
    }
  }
  model.Save(a.Str("out"));
}

void PredictTyping(const Args& a, const StageLog& log) {
  auto model = TypingModel::Load(a.Input("typing-model"));
  ContextFormat format;
  auto data = ReadTypingDataset(a.Input("dataset"), &format);
  if (format != model->config().format()) Fail(ErrorCode::kContract, "dataset format does not match the model");
  auto out = OpenArtifact(a.Str("out"), "typing-predictions");
  out << "key\tlabel\tpredicted";
  for (int c : model->class_ids()) out << "\tp_" << c;
  out << '\n';
  bool labeled = !data.empty();
  for (size_t i = 0; i < data.size(); ++i) {
    auto p = model->Predict(data[i].context);
    size_t best = std::max_element(p.begin(), p.end()) - p.begin();
    out << (data[i].key.empty() ? std::to_string(i) : data[i].key) << '\t'
        << (data[i].label >= 0 ? std::to_string(data[i].label) : std::string("?")) << '\t'
        << model->class_ids()[best];
    for (double v : p) out << '\t' << Fixed6(v);
    out << '\n';
    labeled = labeled && data[i].label >= 0;
  }
  if (labeled) {
    auto ev = EvaluateTyping(*model, data);
    log("micro-F1 " + Format("%.4f", ev.micro_f1) + " avg loss " + Format("%.6f", ev.avg_loss));
  }
  log(std::to_string(data.size()) + " predictions");
}

void Candgen(const Args& a, const StageLog& log) {
  auto docs = ParseCorpus(a.Input("corpus"));
  KnowledgeBase kb = ParseKb(a.Input("kb"), LoadTypes(a));
  SurfaceFormStore store = ParseSurfaceForms(a.Input("surface-forms"));
  Cooccurrence coocc = a.Has("coocc") ? Cooccurrence::Load(a.Input("coocc")) : Cooccurrence{};
  NameLexicons lex = NameLexicons::Load(a.Has("first-names") ? a.Input("first-names") : "",
                                        a.Has("surnames") ? a.Input("surnames") : "");
  CandGenParams p;
  p.trigram_threshold = a.Double("trigram-threshold");
  p.edit_ratio = a.Double("edit-ratio");
  p.min_words = static_cast<int>(a.Int("min-words"));
  p.max_word_diff = static_cast<int>(a.Int("max-word-diff"));
  p.top_n = static_cast<int>(a.Int("top-n"));
  p.coocc_top_r = static_cast<int>(a.Int("coocc-top-r"));
  TrigramIndex index(store);
  std::vector<DocumentCandidates> out;
  CandidateSets all;
  std::vector<std::optional<std::string>> golds;
  size_t total = 0;
  for (const auto& d : docs) {
    out.push_back({d.id, GenerateDocumentCandidates(d, index, kb, coocc, p, &lex)});
    for (size_t m = 0; m < d.mentions.size(); ++m) {
      all.push_back(out.back().sets[m]);
      golds.push_back(d.mentions[m].gold);
      total += out.back().sets[m].size();
    }
  }
  WriteCandidates(a.Str("out"), out);
  log(std::to_string(all.size()) + " mentions, " + std::to_string(total) + " candidates, gold recall@" +
      std::to_string(p.top_n) + " " + Format("%.2f", GoldRecall(all, golds, p.top_n)) + "%");
}

// Models, tables and documents shared by `features` and `rank`.
struct Pipeline {
  KnowledgeBase kb;
  SurfaceFormStore store;
  std::vector<Document> docs;
  std::vector<DocumentCandidates> cands;
  std::vector<std::unique_ptr<TypingModel>> typing;
  EmbeddingTable entity_vectors, word_vectors;
  std::unique_ptr<DocSimilarity> docsim;
  RankingResources res;

  explicit Pipeline(const Args& a) {
    kb = ParseKb(a.Input("kb"), LoadTypes(a));
    store = ParseSurfaceForms(a.Input("surface-forms"));
    docs = ParseCorpus(a.Input("corpus"));
    cands = ReadCandidates(a.Input("candidates"), docs);
    NameLexicons lex = NameLexicons::Load(a.Has("first-names") ? a.Input("first-names") : "",
                                          a.Has("surnames") ? a.Input("surnames") : "");
    for (auto& dc : cands) {
      for (auto& set : dc.sets) {
        for (auto& c : set) FillSurfaceTypes(&c, kb, store, &lex);
      }
    }
    std::set<Flavor> clustered;
    for (const auto& path : a.Inputs("clusterings")) {
      Clustering c = ReadClustering(path);
      if (!clustered.insert(c.flavor).second) {
        Fail(ErrorCode::kInvalidArgument, std::string("two clusterings of flavor ") + FlavorName(c.flavor));
      }
      AssignTypes(c, &kb);
    }
    for (const auto& path : a.Inputs("typing-models")) {
      typing.push_back(TypingModel::Load(path));
      Flavor f = typing.back()->config().flavor;
      if (res.typing[static_cast<int>(f)]) {
        Fail(ErrorCode::kInvalidArgument, std::string("two typing models of flavor ") + FlavorName(f));
      }
      if (!clustered.count(f)) {
        Fail(ErrorCode::kMissingArtifact, std::string("no clustering of flavor ") + FlavorName(f) +
                                              " for its typing model (produced by `cmtned cluster`)");
      }
      res.typing[static_cast<int>(f)] = typing.back().get();
    }
    if (a.Has("flavors")) {
      for (const auto& f : a.List("flavors")) res.stage1_flavors.push_back(ParseFlavor(f));
    } else {
      for (int f = 0; f < kNumFlavors; ++f) {
        if (res.typing[f] && static_cast<Flavor>(f) != Flavor::kEntity) {
          res.stage1_flavors.push_back(static_cast<Flavor>(f));
        }
      }
    }
    if (a.Has("entity-vectors")) {
      entity_vectors = ReadEmbeddings(a.Input("entity-vectors"));
      res.entity_vectors = &entity_vectors;
    }
    if (a.Has("word-vectors") != a.Has("reference-corpus")) {
      Fail(ErrorCode::kInvalidArgument, "--word-vectors and --reference-corpus go together");
    }
    if (a.Has("word-vectors")) {
      word_vectors = ReadEmbeddings(a.Input("word-vectors"));
      docsim = std::make_unique<DocSimilarity>(ParseCorpus(a.Input("reference-corpus")), word_vectors);
    }
    res.kb = &kb;
    res.store = &store;
    res.options.context_top_n = static_cast<int>(a.Int("context-top-n"));
    res.options.context_window = static_cast<int>(a.Int("context-window"));
    res.raw_doc_sim = a.Bool("raw-doc-sim");
  }

  std::vector<std::vector<double>> DocSims(size_t d) const {
    if (docsim) return docsim->Compute(docs[d], cands[d].sets);
    std::vector<std::vector<double>> zeros;
    for (const auto& set : cands[d].sets) zeros.emplace_back(set.size(), 0.0);
    return zeros;
  }
};

void Features(const Args& a, const StageLog& log) {
  Pipeline p(a);
  const int stage = static_cast<int>(a.Int("stage"));
  if (stage != 1 && stage != 2) Fail(ErrorCode::kInvalidArgument, "--stage must be 1 or 2");
  std::unique_ptr<RankerModel> stage1;
  if (stage == 2) stage1 = RankerModel::Load(a.Input("stage1-model"));
  FeatureTable table;
  table.names = FeatureLayout(stage, p.res.stage1_flavors, p.res.raw_doc_sim).names();
  for (size_t d = 0; d < p.docs.size(); ++d) {
    auto r = RankDocument(p.docs[d], p.cands[d].sets, p.DocSims(d), p.res, stage1.get(), nullptr, 0.0, stage == 2);
    AppendFeatureRows(p.docs[d], p.cands[d].sets, stage == 1 ? r.stage1_features : r.stage2_features, &table);
  }
  WriteFeatureTable(a.Str("out"), table);
  int positives = 0;
  for (const auto& r : table.rows) positives += r.label;
  log("stage-" + std::to_string(stage) + " features: " + std::to_string(table.rows.size()) + " rows (" +
      std::to_string(positives) + " gold), " + std::to_string(table.names.size()) + " slots");
}

std::vector<int> IntList(const Args& a, const std::string& key) {
  std::vector<int> out;
  for (const auto& s : a.List(key)) out.push_back(static_cast<int>(ParseInt(s, "--" + key)));
  return out;
}

void TrainRankerStage(const Args& a, const StageLog& log) {
  FeatureTable train = ReadFeatureTable(a.Input("features"));
  FeatureTable dev;
  if (a.Has("dev-features")) dev = ReadFeatureTable(a.Input("dev-features"));
  RankerConfig cfg;
  cfg.feature_names = train.names;
  cfg.stage = FeatureLayout::FromNames(train.names).stage();
  cfg.hidden = IntList(a, "hidden");
  cfg.dropout.clear();
  for (const auto& s : a.List("dropout")) cfg.dropout.push_back(ParseDouble(s, "--dropout"));
  RankerModel model(cfg, a.Seed());
  RankerHyperparams hp;
  hp.learning_rate = a.Double("learning-rate");
  hp.momentum = a.Double("momentum");
  hp.weight_decay = a.Double("weight-decay");
  hp.clip_norm = a.Double("clip");
  hp.batch_size = static_cast<int>(a.Int("batch"));
  hp.epochs = static_cast<int>(a.Int("epochs"));
  hp.patience = static_cast<int>(a.Int("patience"));
  hp.negatives_per_mention = static_cast<int>(a.Int("negatives-per-mention"));
  hp.seed = a.Seed();
  auto history = TrainRanker(&model, train, a.Has("dev-features") ? &dev : nullptr, hp);
  for (const auto& e : history) {
    log("epoch " + std::to_string(e.epoch) + " train loss " + Format("%.6f", e.train_loss) + " dev F1 " +
        Format("%.4f", e.dev_f1));
  }
  if (a.Has("history-out")) {
    auto out = OpenArtifact(a.Str("history-out"), "ranker-history");
    out << "epoch\ttrain_loss\tdev_f1\n";
    for (const auto& e : history) out << e.epoch << '\t' << Fixed6(e.train_loss) << '\t' << Fixed6(e.dev_f1) << '\n';
  }
  model.Save(a.Str("out"));
}

void Rank(const Args& a, const StageLog& log) {
  Pipeline p(a);
  auto stage1 = RankerModel::Load(a.Input("stage1-model"));
  std::unique_ptr<RankerModel> stage2;
  if (a.Has("stage2-model")) stage2 = RankerModel::Load(a.Input("stage2-model"));
  const double threshold = a.Double("threshold");
  std::vector<Prediction> final_preds, stage1_preds;
  for (size_t d = 0; d < p.docs.size(); ++d) {
    auto r = RankDocument(p.docs[d], p.cands[d].sets, p.DocSims(d), p.res, stage1.get(), stage2.get(), threshold);
    final_preds.insert(final_preds.end(), r.predictions.begin(), r.predictions.end());
    stage1_preds.insert(stage1_preds.end(), r.stage1_predictions.begin(), r.stage1_predictions.end());
  }
  WritePredictions(a.Str("out"), final_preds);
  if (a.Has("out-stage1")) WritePredictions(a.Str("out-stage1"), stage1_preds);
  size_t linked = 0;
  for (const auto& pr : final_preds) linked += pr.entity.has_value();
  log(std::to_string(final_preds.size()) + " mentions ranked, " + std::to_string(linked) + " linked (" +
      (stage2 ? "two stages" : "stage 1 only") + ")");
}

void EvaluateStage(const Args& a, const StageLog& log) {
  auto docs = ParseCorpus(a.Input("corpus"));
  auto golds = GoldsFromCorpus(docs);
  std::string name = a.Has("name") ? a.Str("name") : std::filesystem::path(a.Str("corpus")).stem().string();
  ReportRow row = Evaluate(name, golds, ReadPredictions(a.Input("predictions")));
  if (a.Has("candidates")) {
    auto cands = ReadCandidates(a.Input("candidates"), docs);
    CandidateSets all;
    std::vector<std::optional<std::string>> g;
    for (size_t d = 0; d < docs.size(); ++d) {
      for (size_t m = 0; m < docs[d].mentions.size(); ++m) {
        all.push_back(cands[d].sets[m]);
        g.push_back(docs[d].mentions[m].gold);
      }
    }
    row.gold_recall = GoldRecall(all, g, static_cast<int>(a.Int("top-n")));
  }
  if (a.Has("out")) WriteReportTsv(a.Str("out"), {row});
  std::string table = FormatReportTable({row});
  for (const auto& line : Split(table, '\n')) {
    if (!line.empty()) log(line);
  }
}

void RandTest(const Args& a, const StageLog& log) {
  auto docs = ParseCorpus(a.Input("corpus"));
  auto golds = GoldsFromCorpus(docs);
  auto pa = AlignPredictions(golds, ReadPredictions(a.Input("predictions-a")));
  auto pb = AlignPredictions(golds, ReadPredictions(a.Input("predictions-b")));
  double p = RandomizationTest(golds, pa, pb, static_cast<int>(a.Int("rounds")), a.Seed());
  double fa = MicroPrf(golds, pa).f1, fb = MicroPrf(golds, pb).f1;
  log("F1 A " + Format("%.4f", fa) + ", F1 B " + Format("%.4f", fb) + ", p = " + Format("%.6f", p));
  if (a.Has("out")) {
    auto out = OpenArtifact(a.Str("out"), "randtest");
    out << "f1_a\tf1_b\trounds\tp_value\n"
        << Fixed6(fa) << '\t' << Fixed6(fb) << '\t' << a.Int("rounds") << '\t' << Fixed6(p) << '\n';
  }
}

void SynthStage(const Args& a, const StageLog& log) {
  SynthOptions o;
  o.seed = a.Seed();
  o.topics = static_cast<int>(a.Int("topics"));
  o.ambiguous_surfaces = static_cast<int>(a.Int("ambiguous-surfaces"));
  o.senses = static_cast<int>(a.Int("senses"));
  o.unambiguous = static_cast<int>(a.Int("unambiguous"));
  o.train_docs = static_cast<int>(a.Int("train-docs"));
  o.test_docs = static_cast<int>(a.Int("test-docs"));
  o.topic_words = static_cast<int>(a.Int("topic-words"));
  o.sentences_per_doc = static_cast<int>(a.Int("sentences"));
  o.off_topic_rate = a.Double("off-topic");
  SynthFixture fx = GenerateSynthFixture(o);
  WriteSynthFixture(a.Str("out-dir"), fx);
  log("synthetic fixture: " + std::to_string(fx.kb.size()) + " entities, " + std::to_string(fx.train.size()) +
      " train + " + std::to_string(fx.test.size()) + " test documents in " + a.Str("out-dir"));
}

void Report(const Args& a, const StageLog& log) {
  std::vector<ReportRow> rows;
  for (const auto& path : a.Inputs("reports")) {
    auto r = ReadReportTsv(path);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (a.Has("out")) WriteReportTsv(a.Str("out"), rows);
  std::string table = FormatReportTable(rows);
  if (a.Has("out-text")) {
    std::ofstream out(a.Str("out-text"));
    out << table;
    if (!out) Fail(ErrorCode::kIo, "write failed for '" + a.Str("out-text") + "'");
  }
  for (const auto& line : Split(table, '\n')) {
    if (!line.empty()) log(line);
  }
  auto summary = SummarizeReplications(rows);
  if (a.Has("out-summary")) WriteReplicationTsv(a.Str("out-summary"), summary);
  if (summary.size() < rows.size()) {
    for (const auto& line : Split(FormatReplicationTable(summary), '\n')) {
      if (!line.empty()) log(line);
    }
  }
}

using StageFn = void (*)(const Args&, const StageLog&);

const std::map<std::string, StageFn>& Runners() {
  static const std::map<std::string, StageFn> kRunners = {
      {"ingest", Ingest},
      {"mine-coocc", MineCoocc},
      {"build-streams", BuildStreams},
      {"embed", Embed},
      {"cluster", Cluster},
      {"agccs", AgccsStage},
      {"select-combo", SelectCombo},
      {"build-typing-data", BuildTypingData},
      {"train-typing", TrainTypingStage},
      {"predict-typing", PredictTyping},
      {"candgen", Candgen},
      {"features", Features},
      {"train-ranker", TrainRankerStage},
      {"rank", Rank},
      {"evaluate", EvaluateStage},
      {"randtest", RandTest},
      {"synth-fixture", SynthStage},
      {"report", Report},
  };
  return kRunners;
}

}  // namespace

const std::vector<StageInfo>& Stages() {
  static const std::vector<StageInfo> kStages = BuildStageTable();
  return kStages;
}

const StageInfo* FindStage(std::string_view name) {
  for (const auto& s : Stages()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void RunStage(const std::string& name, const StageArgs& args, const StageLog& log) {
  const StageInfo* info = FindStage(name);
  auto it = Runners().find(name);
  if (!info || it == Runners().end()) Fail(ErrorCode::kInvalidArgument, "unknown stage '" + name + "'");
  Args a(*info, args);
  // Shared options are validated even by stages that do not use them.
  a.Seed();
  if (a.Int("jobs") < 1) Fail(ErrorCode::kInvalidArgument, "--jobs must be at least 1");
  a.Bool("deterministic");
  it->second(a, log ? log : StageLog([](const std::string&) {}));
}

}  // namespace cmt

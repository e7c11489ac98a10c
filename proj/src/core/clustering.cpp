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

#include "core/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>
#include <unordered_map>

namespace cmt {

std::optional<int> Clustering::Lookup(std::string_view id) const {
  auto it = assignment.find(std::string(id));
  if (it == assignment.end()) return std::nullopt;
  return it->second;
}

void Clustering::Validate() const {
  if (k < 1) Fail(ErrorCode::kContract, "clustering has k < 1");
  if (assignment.empty()) Fail(ErrorCode::kContract, "clustering assigns nothing");
  for (const auto& [t, c] : assignment) {
    if (c < 0 || c >= k) {
      Fail(ErrorCode::kContract, "cluster id " + std::to_string(c) + " of '" + t +
                                     "' outside [0, " + std::to_string(k) + ")");
    }
  }
}

void WriteClustering(const std::string& path, const Clustering& c) {
  auto out = OpenArtifact(path, "clustering");
  out << '#' << FlavorName(c.flavor) << ' ' << c.k << '\n';
  for (const auto& [t, id] : c.assignment) out << t << '\t' << id << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

Clustering ReadClustering(const std::string& path) {
  LineReader reader(path, "clustering");
  std::string line;
  if (!reader.Next(&line) || !StartsWith(line, "#")) reader.Error("missing '#flavor k' line");
  auto head = SplitWords(line.substr(1));
  if (head.size() != 2) reader.Error("expected '#flavor k'");
  Clustering c;
  c.flavor = ParseFlavor(head[0]);
  c.k = static_cast<int>(ParseInt(head[1], path));
  while (reader.Next(&line)) {
    if (line.empty()) continue;
    auto parts = Split(line, '\t');
    if (parts.size() != 2 || parts[0].empty()) reader.Error("expected 'token \\t cluster_id'");
    int id = static_cast<int>(ParseInt(parts[1], path + ":" + std::to_string(reader.line_number())));
    if (id < 0 || id >= c.k) reader.Error("cluster id out of range");
    if (!c.assignment.emplace(parts[0], id).second) reader.Error("duplicate token '" + parts[0] + "'");
  }
  c.Validate();
  return c;
}

namespace {

double SquaredDistance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Nearest centroid for points [lo, hi); ties go to the lowest index.
void AssignRange(const std::vector<std::vector<double>>& points,
                 const std::vector<std::vector<double>>& centroids, size_t lo, size_t hi,
                 std::vector<int>* labels, std::vector<double>* dist) {
  for (size_t i = lo; i < hi; ++i) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centroids.size(); ++c) {
      double d = SquaredDistance(points[i], centroids[c]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(c);
      }
    }
    (*labels)[i] = best;
    (*dist)[i] = bd;
  }
}

KMeansResult KMeansOnce(const std::vector<std::vector<double>>& points, const KMeansOptions& opt,
                        uint64_t seed) {
  const size_t n = points.size();
  std::mt19937_64 rng(seed);
  KMeansResult r;
  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  size_t first = rng() % n;
  r.centroids.push_back(points[first]);
  chosen[first] = true;
  while (static_cast<int>(r.centroids.size()) < opt.k) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SquaredDistance(points[i], r.centroids.back()));
      total += d2[i];
    }
    size_t pick = n;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= u && d2[i] > 0) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (size_t i = n; i-- > 0;) {
          if (d2[i] > 0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      for (size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    r.centroids.push_back(points[pick]);
  }

  const int k = opt.k;
  std::vector<int> labels(n, -1), next(n);
  std::vector<double> dist(n);
  const int threads = std::max(1, opt.threads);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    if (threads == 1) {
      AssignRange(points, r.centroids, 0, n, &next, &dist);
    } else {
      std::vector<std::thread> pool;
      size_t chunk = (n + threads - 1) / threads;
      for (int t = 0; t < threads; ++t) {
        size_t lo = std::min(n, t * chunk), hi = std::min(n, lo + chunk);
        pool.emplace_back(AssignRange, std::cref(points), std::cref(r.centroids), lo, hi, &next,
                          &dist);
      }
      for (auto& th : pool) th.join();
    }
    KMeansIteration log;
    log.iteration = it;
    // Reseed empty clusters with the point farthest from its own centroid,
    // taken from a cluster that can spare it.
    std::vector<int> sizes(k, 0);
    for (int l : next) ++sizes[l];
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      size_t far = n;
      for (size_t i = 0; i < n; ++i) {
        if (sizes[next[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      if (far == n) break;
      --sizes[next[far]];
      next[far] = c;
      sizes[c] = 1;
      r.centroids[c] = points[far];
      dist[far] = 0;
      ++log.reseeded;
    }
    size_t changed = 0;
    for (size_t i = 0; i < n; ++i) changed += next[i] != labels[i];
    labels = next;
    for (double d : dist) log.inertia += d;
    log.changed_fraction = static_cast<double>(changed) / n;
    r.log.push_back(log);
    // Centroid update.
    std::vector<std::vector<double>> sums(k, std::vector<double>(points[0].size(), 0.0));
    for (size_t i = 0; i < n; ++i) {
      for (size_t d = 0; d < points[i].size(); ++d) sums[labels[i]][d] += points[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (double& v : sums[c]) v /= sizes[c];
      r.centroids[c] = std::move(sums[c]);
    }
    if (log.changed_fraction <= opt.stop_fraction) break;
  }
  r.labels = labels;
  for (size_t i = 0; i < n; ++i) r.inertia += SquaredDistance(points[i], r.centroids[labels[i]]);
  return r;
}

}  // namespace

KMeansResult KMeans(const std::vector<std::vector<double>>& points, const KMeansOptions& opt) {
  if (opt.k < 2) Fail(ErrorCode::kInvalidArgument, "k-means needs k >= 2");
  if (static_cast<size_t>(opt.k) > points.size()) {
    Fail(ErrorCode::kInvalidArgument, "k=" + std::to_string(opt.k) + " exceeds the " +
                                          std::to_string(points.size()) + " points to cluster");
  }
  KMeansResult best;
  for (int s = 0; s < std::max(1, opt.restarts); ++s) {
    KMeansResult r = KMeansOnce(points, opt, opt.seed + 1000003ULL * s);
    if (s == 0 || r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

Clustering KMeansCluster(const EmbeddingTable& table, Flavor flavor, const KMeansOptions& options,
                         const std::vector<std::string>& keep, KMeansResult* details) {
  std::vector<std::string> tokens;
  if (keep.empty()) {
    tokens = table.tokens();
  } else {
    for (const auto& t : keep) {
      if (table.Index(t)) tokens.push_back(t);
    }
  }
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  std::vector<std::vector<double>> points;
  for (const auto& t : tokens) {
    auto row = table.Lookup(t);
    points.emplace_back(row.begin(), row.end());
  }
  KMeansResult r = KMeans(points, options);
  Clustering c;
  c.flavor = flavor;
  c.k = options.k;
  for (size_t i = 0; i < tokens.size(); ++i) c.assignment[tokens[i]] = r.labels[i];
  if (details) *details = std::move(r);
  return c;
}

namespace {

double Term(double c, double l, double r, double n) {
  if (c <= 0) return 0.0;
  return c / n * std::log(c * n / (l * r));
}

class BrownState {
 public:
  explicit BrownState(size_t num_tokens) : cluster_of_(num_tokens, -1) {}

  void AddBigram(int u, int v, double c) { out_[u].push_back({v, c}); in_[v].push_back({u, c}); }

  // New singleton cluster for |t|; counts bigrams with active tokens only.
  void Activate(int t) {
    int m = static_cast<int>(members_.size());
    members_.push_back({t});
    cluster_of_[t] = m;
    for (auto& row : counts_) row.push_back(0.0);
    counts_.emplace_back(m + 1, 0.0);
    for (auto [v, c] : out_[t]) {
      if (cluster_of_[v] >= 0) counts_[m][cluster_of_[v]] += c;
    }
    for (auto [u, c] : in_[t]) {
      if (u != t && cluster_of_[u] >= 0) counts_[cluster_of_[u]][m] += c;
    }
    Recompute();
  }

  double MergeLoss(int a, int b) const {
    const int m = static_cast<int>(members_.size());
    double removed = 0;
    for (int y = 0; y < m; ++y) {
      removed += T(a, y) + T(b, y) + T(y, a) + T(y, b);
    }
    removed -= T(a, a) + T(a, b) + T(b, a) + T(b, b);
    double lm = left_[a] + left_[b], rm = right_[a] + right_[b];
    double added = 0;
    for (int y = 0; y < m; ++y) {
      if (y == a || y == b) continue;
      added += Term(counts_[a][y] + counts_[b][y], lm, right_[y], total_);
      added += Term(counts_[y][a] + counts_[y][b], left_[y], rm, total_);
    }
    added += Term(counts_[a][a] + counts_[a][b] + counts_[b][a] + counts_[b][b], lm, rm, total_);
    return removed - added;
  }

  // Merges b into a (a < b); later clusters shift down by one.
  void Merge(int a, int b) {
    const int m = static_cast<int>(members_.size());
    for (int y = 0; y < m; ++y) counts_[a][y] += counts_[b][y];
    for (int x = 0; x < m; ++x) counts_[x][a] += counts_[x][b];
    counts_.erase(counts_.begin() + b);
    for (auto& row : counts_) row.erase(row.begin() + b);
    for (int t : members_[b]) members_[a].push_back(t);
    members_.erase(members_.begin() + b);
    for (int c = 0; c < static_cast<int>(members_.size()); ++c) {
      for (int t : members_[c]) cluster_of_[t] = c;
    }
    Recompute();
  }

  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<std::vector<int>>& members() const { return members_; }

 private:
  double T(int x, int y) const { return Term(counts_[x][y], left_[x], right_[y], total_); }

  void Recompute() {
    const size_t m = members_.size();
    left_.assign(m, 0.0);
    right_.assign(m, 0.0);
    total_ = 0;
    for (size_t x = 0; x < m; ++x) {
      for (size_t y = 0; y < m; ++y) {
        left_[x] += counts_[x][y];
        right_[y] += counts_[x][y];
        total_ += counts_[x][y];
      }
    }
  }

  std::vector<int> cluster_of_;
  std::unordered_map<int, std::vector<std::pair<int, double>>> out_, in_;
  std::vector<std::vector<int>> members_;
  std::vector<std::vector<double>> counts_;
  std::vector<double> left_, right_;
  double total_ = 0;
};

}  // namespace

Clustering BrownCluster(const std::vector<std::vector<std::string>>& streams, int k,
                        std::vector<BrownMerge>* trace) {
  if (k < 2) Fail(ErrorCode::kInvalidArgument, "Brown clustering needs k >= 2");
  std::unordered_map<std::string, int64_t> freq;
  for (const auto& s : streams) {
    for (const auto& t : s) ++freq[t];
  }
  if (freq.size() < static_cast<size_t>(k)) {
    Fail(ErrorCode::kInvalidArgument, "only " + std::to_string(freq.size()) +
                                          " distinct tokens for k=" + std::to_string(k));
  }
  std::vector<std::string> order;
  for (const auto& [t, f] : freq) order.push_back(t);
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return freq[a] != freq[b] ? freq[a] > freq[b] : a < b;
  });
  std::unordered_map<std::string, int> id;
  for (size_t i = 0; i < order.size(); ++i) id[order[i]] = static_cast<int>(i);

  std::map<std::pair<int, int>, double> bigrams;
  for (const auto& s : streams) {
    for (size_t i = 0; i + 1 < s.size(); ++i) bigrams[{id[s[i]], id[s[i + 1]]}] += 1;
  }
  BrownState state(order.size());
  for (const auto& [uv, c] : bigrams) state.AddBigram(uv.first, uv.second, c);

  for (int t = 0; t < static_cast<int>(order.size()); ++t) {
    state.Activate(t);
    if (state.size() <= k) continue;
    int ba = 0, bb = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < state.size(); ++a) {
      for (int b = a + 1; b < state.size(); ++b) {
        double loss = state.MergeLoss(a, b);
        if (loss < best - 1e-12) {
          best = loss;
          ba = a;
          bb = b;
        }
      }
    }
    if (trace) {
      BrownMerge m;
      for (const auto& cl : state.members()) {
        std::vector<std::string> names;
        for (int x : cl) names.push_back(order[x]);
        m.clusters.push_back(std::move(names));
      }
      m.a = ba;
      m.b = bb;
      trace->push_back(std::move(m));
    }
    state.Merge(ba, bb);
  }
  Clustering c;
  c.flavor = Flavor::kBrown;
  c.k = k;
  for (int cl = 0; cl < state.size(); ++cl) {
    for (int t : state.members()[cl]) c.assignment[order[t]] = cl;
  }
  return c;
}

double AverageMutualInformation(const std::vector<std::vector<std::string>>& streams,
                                const std::map<std::string, int>& cluster_of) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> left, right;
  double total = 0;
  for (const auto& s : streams) {
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      auto a = cluster_of.find(s[i]);
      auto b = cluster_of.find(s[i + 1]);
      if (a == cluster_of.end() || b == cluster_of.end()) continue;
      joint[{a->second, b->second}] += 1;
      left[a->second] += 1;
      right[b->second] += 1;
      total += 1;
    }
  }
  double ami = 0;
  for (const auto& [ab, c] : joint) ami += Term(c, left[ab.first], right[ab.second], total);
  return ami;
}

void AssignTypes(const Clustering& clustering, KnowledgeBase* kb) {
  const int slot = static_cast<int>(clustering.flavor);
  for (auto& e : kb->mutable_entities()) e.cluster_types[slot] = clustering.Lookup(e.id);
}

double Agccs(const Clustering& clustering, const std::vector<GoldCandidates>& mentions,
             int* eligible) {
  double sum = 0;
  int n = 0;
  for (const auto& m : mentions) {
    auto gold_cluster = clustering.Lookup(m.gold);
    if (!gold_cluster) continue;
    if (std::find(m.candidates.begin(), m.candidates.end(), m.gold) == m.candidates.end()) continue;
    int size = 0;
    for (const auto& c : m.candidates) {
      auto cl = clustering.Lookup(c);
      if (cl && *cl == *gold_cluster) ++size;
    }
    sum += size;
    ++n;
  }
  if (eligible) *eligible = n;
  if (n == 0) Fail(ErrorCode::kContract, "AGCCS: no mention has a clustered gold among its candidates");
  return sum / n;
}

double ConfusionPenalty(const VariantProbs& variant, const std::vector<GoldCandidates>& mentions) {
  if (variant.probs.size() != mentions.size()) {
    Fail(ErrorCode::kContract, "variant '" + variant.name + "' has probabilities for " +
                                   std::to_string(variant.probs.size()) + " mentions, expected " +
                                   std::to_string(mentions.size()));
  }
  auto missing = [&](size_t m, const std::string& cand) {
    Fail(ErrorCode::kContract, "missing typing probability for mention " + std::to_string(m) +
                                   ", candidate '" + cand + "', flavor " +
                                   FlavorName(variant.flavor) + " (variant '" + variant.name + "')");
  };
  double penalty = 0;
  for (size_t m = 0; m < mentions.size(); ++m) {
    const auto& cands = mentions[m].candidates;
    const auto& probs = variant.probs[m];
    if (probs.size() != cands.size()) missing(m, "<count mismatch>");
    auto g = std::find(cands.begin(), cands.end(), mentions[m].gold);
    if (g == cands.end()) continue;
    size_t gi = g - cands.begin();
    if (!probs[gi]) missing(m, cands[gi]);
    for (size_t c = 0; c < cands.size(); ++c) {
      if (c == gi) continue;
      if (!probs[c]) missing(m, cands[c]);
      if (*probs[c] > *probs[gi]) penalty += *probs[c] - *probs[gi];
    }
  }
  return penalty;
}

std::vector<CombinationScore> SelectCombinations(const std::vector<VariantProbs>& variants,
                                                 const std::vector<GoldCandidates>& mentions,
                                                 int top) {
  const Flavor kOrder[] = {Flavor::kWord, Flavor::kSurface, Flavor::kSynset, Flavor::kBrown};
  std::vector<std::vector<std::pair<std::string, double>>> groups;
  for (Flavor f : kOrder) {
    std::vector<std::pair<std::string, double>> g;
    for (const auto& v : variants) {
      if (v.flavor == f) g.emplace_back(v.name, ConfusionPenalty(v, mentions));
    }
    if (!g.empty()) groups.push_back(std::move(g));
  }
  for (const auto& v : variants) {
    if (v.flavor == Flavor::kEntity) {
      Fail(ErrorCode::kInvalidArgument, "Entity typing variants do not take part in combination "
                                        "selection ('" + v.name + "')");
    }
  }
  if (groups.empty()) Fail(ErrorCode::kInvalidArgument, "no clustering variants given");
  std::vector<CombinationScore> all(1);
  for (const auto& g : groups) {
    std::vector<CombinationScore> next;
    for (const auto& partial : all) {
      for (const auto& [name, p] : g) {
        CombinationScore s = partial;
        s.combo.push_back(name);
        s.penalty += p;
        next.push_back(std::move(s));
      }
    }
    all = std::move(next);
  }
  std::stable_sort(all.begin(), all.end(), [](const CombinationScore& a, const CombinationScore& b) {
    return a.penalty != b.penalty ? a.penalty < b.penalty : a.combo < b.combo;
  });
  if (top >= 0 && all.size() > static_cast<size_t>(top)) all.resize(top);
  return all;
}

}  // namespace cmt

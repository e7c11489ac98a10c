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

// Test-only reference implementations. None of these call into the code
// paths they check beyond the shared string primitives named in each note.

#ifndef CMTNED_TESTS_ORACLES_HPP_
#define CMTNED_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace cmt::oracle {

// Edit distance by the textbook recursion, memoized on (i, j).
inline int LevenshteinRecursive(const std::string& a, const std::string& b) {
  std::map<std::pair<size_t, size_t>, int> memo;
  std::function<int(size_t, size_t)> rec = [&](size_t i, size_t j) -> int {
    if (i == 0) return static_cast<int>(j);
    if (j == 0) return static_cast<int>(i);
    auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    int best = std::min(rec(i - 1, j) + 1, rec(i, j - 1) + 1);
    best = std::min(best, rec(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1));
    memo[key] = best;
    return best;
  };
  return rec(a.size(), b.size());
}

inline std::string RandomString(std::mt19937_64& rng, size_t max_len, const std::string& alphabet) {
  size_t len = rng() % (max_len + 1);
  std::string s;
  for (size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

// Adjusted Rand index between two labelings.
inline double AdjustedRand(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double n) { return n * (n - 1) / 2.0; };
  double index = 0, sa = 0, sb = 0;
  for (auto& [k, v] : table) index += c2(v);
  for (auto& [k, v] : ra) sa += c2(v);
  for (auto& [k, v] : rb) sb += c2(v);
  double expected = sa * sb / c2(static_cast<double>(a.size()));
  double max_index = (sa + sb) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

// Average mutual information of adjacent-cluster bigrams, computed from the
// raw streams for a given token -> cluster map. Bigrams touching a token
// outside the map are ignored.
inline double AverageMutualInformation(const std::vector<std::vector<std::string>>& streams,
                                       const std::map<std::string, int>& cluster_of) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> left, right;
  double total = 0;
  for (const auto& s : streams) {
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      auto ia = cluster_of.find(s[i]), ib = cluster_of.find(s[i + 1]);
      if (ia == cluster_of.end() || ib == cluster_of.end()) continue;
      int a = ia->second, b = ib->second;
      joint[{a, b}] += 1;
      left[a] += 1;
      right[b] += 1;
      total += 1;
    }
  }
  double ami = 0;
  for (auto& [k, n] : joint) {
    double p = n / total;
    ami += p * std::log(p / ((left[k.first] / total) * (right[k.second] / total)));
  }
  return ami;
}

// All set partitions of {0..n-1} into exactly k blocks (restricted growth strings).
inline std::vector<std::vector<int>> PartitionsIntoK(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      if (used == k) out.push_back(cur);
      return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      cur[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return out;
}

// AGCCS by explicit grouping: candidates -> group label (cluster id, or a
// unique tag for unclustered ones), then the gold's group size.
inline std::optional<double> AgccsBrute(
    const std::vector<std::pair<std::vector<std::string>, std::string>>& mentions,
    const std::map<std::string, int>& cluster_of) {
  double sum = 0;
  int n = 0;
  for (const auto& [cands, gold] : mentions) {
    if (!cluster_of.count(gold)) continue;
    if (std::find(cands.begin(), cands.end(), gold) == cands.end()) continue;
    std::map<std::string, int> groups;
    for (size_t i = 0; i < cands.size(); ++i) {
      auto it = cluster_of.find(cands[i]);
      std::string tag = it == cluster_of.end() ? "solo#" + std::to_string(i)
                                               : "c#" + std::to_string(it->second);
      ++groups[tag];
    }
    sum += groups["c#" + std::to_string(cluster_of.at(gold))];
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// Typing-confusion penalty by the double loop over (mention, non-gold candidate).
inline double ConfusionPenaltyBrute(const std::vector<std::vector<double>>& probs,
                       const std::vector<int>& gold_index) {
  double total = 0;
  for (size_t m = 0; m < probs.size(); ++m) {
    if (gold_index[m] < 0) continue;
    for (size_t c = 0; c < probs[m].size(); ++c) {
      if (static_cast<int>(c) == gold_index[m]) continue;
      double d = probs[m][c] - probs[m][gold_index[m]];
      if (d > 0) total += d;
    }
  }
  return total;
}

}  // namespace cmt::oracle

#endif  // CMTNED_TESTS_ORACLES_HPP_

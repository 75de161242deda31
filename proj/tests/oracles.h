#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "taglab/corpus.h"
#include "taglab/lattice.h"

namespace taglab::testing {

// Calls fn on every path of length n over K tags, in lexicographic order.
inline void for_each_path(std::size_t n, std::size_t K, const std::function<void(const std::vector<int>&)>& fn) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= K;
  std::vector<int> path(n);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = n; i-- > 0;) {
      path[i] = static_cast<int>(c % K);
      c /= K;
    }
    fn(path);
  }
}

// Path score written out directly from the definition.
inline double brute_score(const Lattice& L, const std::vector<int>& y) {
  double s = L.start[static_cast<std::size_t>(y[0])] + L.end[static_cast<std::size_t>(y.back())];
  for (std::size_t t = 0; t < y.size(); ++t) {
    s += L.state[t * L.num_tags + static_cast<std::size_t>(y[t])];
    if (t + 1 < y.size()) s += L.trans[static_cast<std::size_t>(y[t]) * L.num_tags + static_cast<std::size_t>(y[t + 1])];
  }
  return s;
}

inline double brute_log_partition(const Lattice& L) {
  double m = -INFINITY;
  for_each_path(L.n, L.num_tags, [&](const std::vector<int>& y) { m = std::max(m, brute_score(L, y)); });
  double z = 0.0;
  for_each_path(L.n, L.num_tags, [&](const std::vector<int>& y) { z += std::exp(brute_score(L, y) - m); });
  return m + std::log(z);
}

struct BruteMarginals {
  std::vector<double> node, edge;
};

inline BruteMarginals brute_marginals(const Lattice& L) {
  const auto K = L.num_tags;
  const double lz = brute_log_partition(L);
  BruteMarginals m;
  m.node.assign(L.n * K, 0.0);
  m.edge.assign(L.n > 0 ? (L.n - 1) * K * K : 0, 0.0);
  for_each_path(L.n, K, [&](const std::vector<int>& y) {
    const double p = std::exp(brute_score(L, y) - lz);
    for (std::size_t t = 0; t < L.n; ++t) {
      m.node[t * K + static_cast<std::size_t>(y[t])] += p;
      if (t + 1 < L.n) m.edge[(t * K + static_cast<std::size_t>(y[t])) * K + static_cast<std::size_t>(y[t + 1])] += p;
    }
  });
  return m;
}

// Highest-scoring path; among exact ties the one that is smallest when
// compared from the last position backwards.
inline std::vector<int> brute_argmax(const Lattice& L) {
  std::vector<int> best;
  double best_score = -INFINITY;
  auto reverse_less = [](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = a.size(); i-- > 0;)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  };
  for_each_path(L.n, L.num_tags, [&](const std::vector<int>& y) {
    const double s = brute_score(L, y);
    if (best.empty() || s > best_score || (s == best_score && reverse_less(y, best))) {
      best = y;
      best_score = s;
    }
  });
  return best;
}

inline Lattice random_lattice(std::size_t n, std::size_t K, std::mt19937_64& rng, double range = 2.0) {
  std::uniform_real_distribution<double> u(-range, range);
  Lattice L(n, K);
  for (auto* v : {&L.state, &L.trans, &L.start, &L.end})
    for (auto& x : *v) x = u(rng);
  return L;
}

// Per-tag scores computed straight from token pairs, without a matrix.
struct BruteReport {
  std::map<std::string, double> precision, recall, f1;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
};

inline BruteReport brute_report(const std::vector<std::vector<std::string>>& gold,
                                const std::vector<std::vector<std::string>>& pred,
                                const std::vector<std::string>& tagset) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t s = 0; s < gold.size(); ++s)
    for (std::size_t t = 0; t < gold[s].size(); ++t) pairs.emplace_back(gold[s][t], pred[s][t]);
  BruteReport r;
  double correct = 0;
  for (const auto& [g, p] : pairs) correct += g == p;
  r.accuracy = correct / static_cast<double>(pairs.size());
  for (const auto& tag : tagset) {
    double tp = 0, predicted = 0, actual = 0;
    for (const auto& [g, p] : pairs) {
      tp += (g == tag && p == tag);
      predicted += p == tag;
      actual += g == tag;
    }
    const double prec = predicted > 0 ? tp / predicted : 0.0;
    const double rec = actual > 0 ? tp / actual : 0.0;
    const double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    r.precision[tag] = prec;
    r.recall[tag] = rec;
    r.f1[tag] = f;
    r.weighted_f1 += actual / static_cast<double>(pairs.size()) * f;
  }
  return r;
}

// Corpus whose tag is a fixed function of the word's last two characters:
// 8 tags, `vocab_size` words spread evenly over the tags, word frequencies
// Zipf-distributed so that the tail is rare.
inline Corpus suffix_corpus(std::size_t n_sentences, std::uint64_t seed, std::size_t vocab_size = 200,
                            std::size_t min_len = 3, std::size_t max_len = 10) {
  static const char* kSuffixes[8] = {"an", "ku", "mu", "ya", "ng", "el", "ir", "os"};
  static const char* kTags[8] = {"NN", "VB", "JJ", "RB", "PR", "CD", "SC", "IN"};
  std::mt19937_64 rng(seed);
  const std::string letters = "bcdfghjklmnprstvwz";
  const std::string vowels = "aeiou";
  std::vector<std::string> words;
  std::vector<int> word_tag;
  std::map<std::string, bool> seen;
  while (words.size() < vocab_size) {
    const int tag = static_cast<int>(words.size() % 8);
    std::string stem;
    const auto syllables = 1 + rng() % 3;
    for (std::size_t i = 0; i < syllables; ++i) {
      stem += letters[rng() % letters.size()];
      stem += vowels[rng() % vowels.size()];
    }
    std::string w = stem + kSuffixes[tag];
    if (seen[w]) continue;
    seen[w] = true;
    words.push_back(w);
    word_tag.push_back(tag);
  }
  std::vector<double> weights;
  for (std::size_t r = 0; r < words.size(); ++r) weights.push_back(1.0 / static_cast<double>(r + 1));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  Corpus corpus;
  for (std::size_t s = 0; s < n_sentences; ++s) {
    TaggedSentence sent;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const auto w = pick(rng);
      sent.tokens.push_back(words[w]);
      sent.tags.push_back(kTags[word_tag[w]]);
    }
    corpus.push_back(std::move(sent));
  }
  return corpus;
}

}  // namespace taglab::testing

#include "taglab/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "taglab/error.h"

namespace taglab {

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(const TagSequences& gold, const TagSequences& pred, std::vector<std::string> tagset) {
  if (gold.size() != pred.size()) throw std::invalid_argument("confusion: sentence count mismatch");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tagset.size(); ++i) index.emplace(tagset[i], i);
  ConfusionMatrix cm;
  const auto K = tagset.size();
  cm.tags = std::move(tagset);
  cm.counts.assign(K * K, 0);
  auto lookup = [&](const std::string& tag) {
    auto it = index.find(tag);
    if (it == index.end()) throw FormatError("confusion: tag '" + tag + "' is not in the tagset");
    return it->second;
  };
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size())
      throw std::invalid_argument("confusion: length mismatch in sentence " + std::to_string(s));
    for (std::size_t t = 0; t < gold[s].size(); ++t) ++cm.counts[lookup(gold[s][t]) * K + lookup(pred[s][t])];
  }
  return cm;
}

ConfusionMatrix confusion(const TagSequences& gold, const TagSequences& pred) {
  std::set<std::string> tags;
  for (const auto* seqs : {&gold, &pred})
    for (const auto& s : *seqs) tags.insert(s.begin(), s.end());
  return confusion(gold, pred, std::vector<std::string>(tags.begin(), tags.end()));
}

TagReport tag_report(const ConfusionMatrix& cm) {
  const auto K = cm.size();
  const auto total = cm.total();
  if (total == 0) throw std::invalid_argument("tag_report: empty confusion matrix");
  TagReport r;
  r.total = total;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < K; ++j) {
      row += cm.at(k, j);
      col += cm.at(j, k);
    }
    const double tp = static_cast<double>(cm.at(k, k));
    TagScores s;
    s.tag = cm.tags[k];
    s.support = row;
    s.precision = col ? tp / static_cast<double>(col) : 0.0;
    s.recall = row ? tp / static_cast<double>(row) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    r.weighted_f1 += static_cast<double>(row) / static_cast<double>(total) * s.f1;
    r.per_tag.push_back(s);
  }
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  return r;
}

double micro_f1(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw std::invalid_argument("micro_f1: empty confusion matrix");
  // Micro precision and recall share numerator (trace) and denominator (total).
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

FoldAggregate aggregate_folds(std::span<const double> scores, bool sample_std) {
  if (scores.size() < 2) throw std::invalid_argument("aggregate_folds: need at least 2 folds");
  const double n = static_cast<double>(scores.size());
  FoldAggregate agg;
  agg.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - agg.mean) * (s - agg.mean);
  agg.std = std::sqrt(ss / (sample_std ? n - 1 : n));
  return agg;
}

std::string format_mean_std(const FoldAggregate& agg) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f)", 100 * agg.mean, 100 * agg.std);
  return buf;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "gold\\pred";
  for (const auto& t : cm.tags) out += "," + t;
  out += '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out += cm.tags[i];
    for (std::size_t j = 0; j < cm.size(); ++j) out += "," + std::to_string(cm.at(i, j));
    out += '\n';
  }
  return out;
}

std::string report_text(const TagReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %9s %9s %9s %9s\n", "tag", "precision", "recall", "f1", "support");
  out += buf;
  for (const auto& s : report.per_tag) {
    std::snprintf(buf, sizeof buf, "%-12s %9.4f %9.4f %9.4f %9zu\n", s.tag.c_str(), s.precision, s.recall, s.f1, s.support);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\nweighted_f1 %.6f\naccuracy %.6f\ntokens %zu\n", report.weighted_f1, report.accuracy,
                report.total);
  out += buf;
  return out;
}

TagSequences gold_tags(std::span<const TaggedSentence> sentences) {
  TagSequences out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.tags);
  return out;
}

}  // namespace taglab

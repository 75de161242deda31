#pragma once

#include <span>
#include <string>
#include <vector>

#include "taglab/corpus.h"

namespace taglab {

// Rows are gold tags, columns predicted tags, both in `tags` order.
struct ConfusionMatrix {
  std::vector<std::string> tags;
  std::vector<std::size_t> counts;  // K x K row-major

  std::size_t size() const { return tags.size(); }
  std::size_t at(std::size_t gold, std::size_t pred) const { return counts[gold * tags.size() + pred]; }
  std::size_t total() const;
  std::size_t trace() const;
};

struct TagScores {
  std::string tag;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct TagReport {
  std::vector<TagScores> per_tag;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;
};

using TagSequences = std::vector<std::vector<std::string>>;

// Tags outside `tagset` raise FormatError; sentence length mismatch raises
// std::invalid_argument.
ConfusionMatrix confusion(const TagSequences& gold, const TagSequences& pred, std::vector<std::string> tagset);
// Tagset taken as the sorted union of gold and predicted tags.
ConfusionMatrix confusion(const TagSequences& gold, const TagSequences& pred);

// Per-tag precision/recall/F1 with zero for any vanishing denominator, and
// the support-weighted average of the per-tag F1.
TagReport tag_report(const ConfusionMatrix& cm);

double micro_f1(const ConfusionMatrix& cm);

struct FoldAggregate {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and standard deviation across folds; sample (n-1) by default.
FoldAggregate aggregate_folds(std::span<const double> scores, bool sample_std = true);

// "97.47 (0.11)" with both values scaled by 100.
std::string format_mean_std(const FoldAggregate& agg);

std::string confusion_csv(const ConfusionMatrix& cm);
std::string report_text(const TagReport& report);

TagSequences gold_tags(std::span<const TaggedSentence> sentences);

}  // namespace taglab

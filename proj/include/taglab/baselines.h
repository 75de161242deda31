#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taglab/corpus.h"

namespace taglab {

// Predicts the most frequent training tag everywhere.
struct MajorModel {
  std::string majority_tag;
};

// Most frequent tag per (lowercased) training word, majority tag otherwise.
struct MemoModel {
  std::map<std::string, std::string> word_tags;
  std::string fallback;
};

// Count ties go to the lexicographically smallest tag.
MajorModel fit_major(std::span<const TaggedSentence> train);
MemoModel fit_memo(std::span<const TaggedSentence> train);

std::vector<std::string> predict_baseline(const MajorModel& model, const TaggedSentence& sentence);
std::vector<std::string> predict_baseline(const MemoModel& model, const TaggedSentence& sentence);

// Plain-text model files: `MAJOR <tag>`, or `MEMO <fallback>` followed by
// `word<TAB>tag` lines.
std::string format_baseline(const MajorModel& model);
std::string format_baseline(const MemoModel& model);
MajorModel parse_major(std::string_view text);
MemoModel parse_memo(std::string_view text);

}  // namespace taglab

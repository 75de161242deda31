#include "taglab/baselines.h"

#include <sstream>

#include "taglab/error.h"

namespace taglab {

namespace {

std::string most_frequent(const std::map<std::string, std::size_t>& counts) {
  // std::map iterates in lexicographic order, so strict '>' keeps the smallest tag on ties.
  const std::string* best = nullptr;
  std::size_t best_count = 0;
  for (const auto& [tag, count] : counts) {
    if (!best || count > best_count) {
      best = &tag;
      best_count = count;
    }
  }
  return best ? *best : std::string();
}

void require_tagged(std::span<const TaggedSentence> train) {
  if (train.empty()) throw UsageError("baseline: empty training set");
  for (const auto& s : train)
    if (!s.tagged()) throw UsageError("baseline: training sentence without tags");
}

}  // namespace

MajorModel fit_major(std::span<const TaggedSentence> train) {
  require_tagged(train);
  std::map<std::string, std::size_t> counts;
  for (const auto& s : train)
    for (const auto& t : s.tags) ++counts[t];
  return {most_frequent(counts)};
}

MemoModel fit_memo(std::span<const TaggedSentence> train) {
  MemoModel model;
  model.fallback = fit_major(train).majority_tag;
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& s : train)
    for (std::size_t i = 0; i < s.size(); ++i) ++counts[normalize(s.tokens[i], false)][s.tags[i]];
  for (const auto& [word, tags] : counts) model.word_tags.emplace(word, most_frequent(tags));
  return model;
}

std::vector<std::string> predict_baseline(const MajorModel& model, const TaggedSentence& sentence) {
  return std::vector<std::string>(sentence.size(), model.majority_tag);
}

std::vector<std::string> predict_baseline(const MemoModel& model, const TaggedSentence& sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.size());
  for (const auto& token : sentence.tokens) {
    auto it = model.word_tags.find(normalize(token, false));
    out.push_back(it == model.word_tags.end() ? model.fallback : it->second);
  }
  return out;
}

std::string format_baseline(const MajorModel& model) { return "MAJOR " + model.majority_tag + "\n"; }

std::string format_baseline(const MemoModel& model) {
  std::string out = "MEMO " + model.fallback + "\n";
  for (const auto& [word, tag] : model.word_tags) out += word + "\t" + tag + "\n";
  return out;
}

MajorModel parse_major(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kw, tag;
  if (!(in >> kw >> tag) || kw != "MAJOR") throw FormatError("not a MAJOR baseline model");
  return {tag};
}

MemoModel parse_memo(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  std::getline(in, header);
  if (header.rfind("MEMO ", 0) != 0 || header.size() <= 5) throw FormatError("not a MEMO baseline model");
  MemoModel model;
  model.fallback = header.substr(5);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw FormatError("MEMO model line " + std::to_string(line_no) + ": expected word<TAB>tag");
    model.word_tags.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  return model;
}

}  // namespace taglab

#include <doctest.h>

#include "oracles.h"
#include "taglab/baselines.h"
#include "taglab/error.h"
#include "taglab/evaluation.h"

using namespace taglab;

TEST_CASE("fit_major picks the most frequent tag, ties lexicographic") {
  CHECK(fit_major(Corpus{{{"a", "b", "c", "d"}, {"NN", "NN", "VB", "NN"}}}).majority_tag == "NN");
  CHECK(fit_major(Corpus{{{"a", "b", "c", "d"}, {"VB", "NN", "VB", "NN"}}}).majority_tag == "NN");
  CHECK_THROWS_AS(fit_major(Corpus{}), UsageError);
}

TEST_CASE("Major output ignores the input") {
  MajorModel m{"NN"};
  CHECK(predict_baseline(m, {{"x", "y", "z"}, {}}) == std::vector<std::string>{"NN", "NN", "NN"});
  CHECK(predict_baseline(m, {{"q"}, {}}) == std::vector<std::string>{"NN"});
}

TEST_CASE("fit_memo memorises per-word majorities") {
  Corpus train{{{"bank", "Bank", "bank", "lari"}, {"NN", "NN", "VB", "VB"}}, {{"lari"}, {"VB"}}};
  auto m = fit_memo(train);
  CHECK(m.word_tags.at("bank") == "NN");
  CHECK(m.fallback == "VB");
  CHECK(predict_baseline(m, {{"BANK", "unseen"}, {}}) == std::vector<std::string>{"NN", "VB"});
}

TEST_CASE("Memo is perfect on an unambiguous training set") {
  Corpus train = testing::suffix_corpus(50, 3);
  auto m = fit_memo(train);
  TagSequences pred;
  for (const auto& s : train) pred.push_back(predict_baseline(m, s));
  auto r = tag_report(confusion(gold_tags(train), pred));
  CHECK(r.accuracy == 1.0);
  CHECK(r.weighted_f1 == 1.0);
}

TEST_CASE("baseline model files round-trip") {
  Corpus train{{{"a", "b", "b"}, {"X", "Y", "Y"}}};
  auto memo = fit_memo(train);
  auto back = parse_memo(format_baseline(memo));
  CHECK(back.word_tags == memo.word_tags);
  CHECK(back.fallback == memo.fallback);
  CHECK(parse_major(format_baseline(MajorModel{"NN"})).majority_tag == "NN");
  CHECK_THROWS_AS(parse_major("MEMO NN\n"), FormatError);
  CHECK_THROWS_AS(parse_memo("MEMO NN\nbroken\n"), FormatError);
}

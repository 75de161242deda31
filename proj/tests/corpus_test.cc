#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "taglab/corpus.h"
#include "taglab/error.h"
#include "taglab/text.h"

using namespace taglab;

TEST_CASE("parse_vertical_corpus reads token/tag lines") {
  auto c = parse_vertical_corpus("saya\tPRP\nmakan\tVBT\n\n");
  REQUIRE(c.size() == 1);
  CHECK(c[0] == TaggedSentence{{"saya", "makan"}, {"PRP", "VBT"}});

  CHECK(parse_vertical_corpus("").empty());

  auto two = parse_vertical_corpus("a\tNN\n\nb\tNN\nc\tVB\n");
  REQUIRE(two.size() == 2);
  CHECK(two[0].size() == 1);
  CHECK(two[1].size() == 2);
}

TEST_CASE("parse_vertical_corpus tolerates CRLF and repeated blank lines") {
  auto c = parse_vertical_corpus("\n\na\tNN\r\n\r\n\n\nb\tVB\n\n\n");
  REQUIRE(c.size() == 2);
  CHECK(c[0].tags[0] == "NN");
}

TEST_CASE("parse_vertical_corpus reports the offending line") {
  try {
    parse_vertical_corpus("a\tNN\nb\n");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_vertical_corpus("a\tNN\tX\n"), FormatError);
  CHECK_THROWS_AS(parse_vertical_corpus("a b\tNN\n"), FormatError);
  CHECK_THROWS_AS(parse_vertical_corpus("\xff\tNN\n"), FormatError);
}

TEST_CASE("untagged input is accepted when tags are optional") {
  auto c = parse_vertical_corpus("saya\nmakan\n\n", false);
  REQUIRE(c.size() == 1);
  CHECK_FALSE(c[0].tagged());
  CHECK_THROWS_AS(parse_vertical_corpus("saya\n"), FormatError);
}

TEST_CASE("parse and format round-trip") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Corpus c;
    for (int s = 0; s < 1 + static_cast<int>(rng() % 5); ++s) {
      TaggedSentence sent;
      for (int t = 0; t < 1 + static_cast<int>(rng() % 6); ++t) {
        sent.tokens.push_back("w" + std::to_string(rng() % 50) + (rng() % 3 == 0 ? "_ku" : ""));
        sent.tags.push_back(rng() % 2 ? "NN" : "VB");
      }
      c.push_back(sent);
    }
    CHECK(parse_vertical_corpus(format_vertical_corpus(c)) == c);
  }
}

TEST_CASE("affixes") {
  auto a = affixes("makan");
  CHECK(a.p2 == "ma");
  CHECK(a.p3 == "mak");
  CHECK(a.s2 == "an");
  CHECK(a.s3 == "kan");

  auto d = affixes("di");
  CHECK(d.p2 == "di");
  CHECK(d.p3 == "di");
  CHECK(d.s2 == "di");
  CHECK(d.s3 == "di");

  auto b = affixes("abc");
  CHECK(b.p2 == "ab");
  CHECK(b.p3 == "abc");
  CHECK(b.s2 == "bc");
  CHECK(b.s3 == "abc");

  CHECK_THROWS(affixes(""));
}

TEST_CASE("affixes slice code points, not bytes") {
  auto a = affixes("caf\xc3\xa9s");  // "cafés"
  CHECK(a.s2 == "\xc3\xa9s");
  CHECK(a.s3 == "f\xc3\xa9s");
  CHECK(affixes("\xc3\xa9\xc3\xa9").p3 == "\xc3\xa9\xc3\xa9");
}

TEST_CASE("affix prefix/suffix nesting property") {
  std::mt19937_64 rng(3);
  const std::string alphabet = "abcdefgh";
  for (int i = 0; i < 200; ++i) {
    std::string w;
    for (std::size_t k = 0; k < 3 + rng() % 8; ++k) w += alphabet[rng() % alphabet.size()];
    auto a = affixes(w);
    CHECK(a.p3.rfind(a.p2, 0) == 0);
    CHECK(a.s3.substr(a.s3.size() - a.s2.size()) == a.s2);
    CHECK(utf8_length(a.p2) == 2);
    CHECK(utf8_length(a.s3) == 3);
  }
}

TEST_CASE("normalize") {
  CHECK(normalize("Jakarta", false) == "jakarta");
  CHECK(normalize("Jakarta", true) == "Jakarta");
  CHECK(normalize("NASA", false) == "nasa");
  CHECK(normalize("\xc3\x89TAT", false) == "\xc3\xa9tat");
}

namespace {

Corpus counts_corpus() {
  // "a" once, "b" twice.
  return {
      {{"a", "b", "b"}, {"NN", "VB", "VB"}},
  };
}

}  // namespace

TEST_CASE("build_vocabulary applies the word and affix thresholds") {
  auto v = build_vocabulary(counts_corpus());
  CHECK(v.words.lookup("a") == SymbolTable::kUnk);
  CHECK(v.words.lookup("b") != SymbolTable::kUnk);
  CHECK(v.words.symbol(SymbolTable::kUnk) == "<unk>");
  CHECK(v.words.symbol(SymbolTable::kPad) == "<pad>");
  CHECK(v.tags.contains("NN"));
  CHECK(v.tags.contains("VB"));
  CHECK(v.word_counts.at("a") == 1);

  Corpus four{{{"kaxy", "kaxy", "kaxy", "kaxy"}, {"NN", "NN", "NN", "NN"}}};
  CHECK_FALSE(build_vocabulary(four).affixes[0].contains("ka"));
  Corpus five{{{"kaxy", "kaxy", "kaxy", "kaxy", "kazz"}, {"NN", "NN", "NN", "NN", "NN"}}};
  auto v5 = build_vocabulary(five);
  CHECK(v5.affixes[0].contains("ka"));
  CHECK_FALSE(v5.affixes[1].contains("kaz"));

  CHECK_THROWS_AS(build_vocabulary(Corpus{}), UsageError);
}

TEST_CASE("raising word_min never adds entries") {
  Corpus c{{{"x", "y", "y", "z", "z", "z", "w", "w", "w", "w"}, {"A", "A", "A", "A", "A", "A", "A", "A", "A", "A"}}};
  std::size_t previous = SIZE_MAX;
  for (std::size_t m = 1; m <= 6; ++m) {
    VocabOptions o;
    o.word_min = m;
    auto size = build_vocabulary(c, o).words.size();
    CHECK(size <= previous);
    previous = size;
  }
}

TEST_CASE("encode_sentence maps unknowns to UNK and rejects unknown tags") {
  Corpus train{{{"Saya", "makan", "saya"}, {"PRP", "VB", "PRP"}}};
  auto v = build_vocabulary(train);
  auto e = encode_sentence(v, {{"SAYA", "nasi", "\xe2\x82\xac"}, {"PRP", "VB", "PRP"}});
  CHECK(e.words[0] != SymbolTable::kUnk);
  CHECK(v.words.symbol(e.words[0]) == "saya");
  CHECK(e.words[1] == SymbolTable::kUnk);
  CHECK(e.chars[2][0] == SymbolTable::kUnk);
  CHECK(e.chars[0][0] == v.chars.lookup("S"));  // characters keep case
  CHECK(e.tags == std::vector<int>{v.tags.lookup("PRP"), v.tags.lookup("VB"), v.tags.lookup("PRP")});
  CHECK_THROWS_AS(encode_sentence(v, {{"saya"}, {"XX"}}), FormatError);
}

TEST_CASE("make_folds sizes and partition") {
  auto folds = make_folds(10, 5, 0);
  REQUIRE(folds.size() == 5);
  for (const auto& f : folds) {
    CHECK(f.test_ids.size() == 2);
    CHECK(f.dev_ids.size() == 2);
    CHECK(f.train_ids.size() == 6);
  }
  auto again = make_folds(10, 5, 0);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(folds[i].train_ids == again[i].train_ids);
    CHECK(folds[i].test_ids == again[i].test_ids);
  }

  auto eleven = make_folds(11, 5, 9);
  std::multiset<std::size_t> sizes;
  for (const auto& f : eleven) sizes.insert(f.test_ids.size());
  CHECK(sizes == std::multiset<std::size_t>{2, 2, 2, 2, 3});

  CHECK_THROWS(make_folds(3, 5, 0));
}

TEST_CASE("every fold partitions the sentence ids") {
  for (std::size_t n : {5u, 7u, 23u, 100u}) {
    for (int k : {2, 3, 5}) {
      if (n < static_cast<std::size_t>(k)) continue;
      auto folds = make_folds(n, k, n * 31 + static_cast<std::size_t>(k));
      for (const auto& f : folds) {
        std::vector<std::size_t> all;
        for (const auto* part : {&f.train_ids, &f.dev_ids, &f.test_ids}) all.insert(all.end(), part->begin(), part->end());
        std::sort(all.begin(), all.end());
        REQUIRE(all.size() == n);
        for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
        CHECK(f.test_ids == folds[static_cast<std::size_t>(f.fold)].test_ids);
        CHECK(f.dev_ids == folds[static_cast<std::size_t>((f.fold + 1) % k)].test_ids);
      }
    }
  }
}

TEST_CASE("split files round-trip and are validated") {
  auto folds = make_folds(12, 3, 5);
  auto parsed = parse_split_file(format_split_file(folds), 12);
  REQUIRE(parsed.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(parsed[i].train_ids == folds[i].train_ids);
    CHECK(parsed[i].dev_ids == folds[i].dev_ids);
    CHECK(parsed[i].test_ids == folds[i].test_ids);
  }
  CHECK_THROWS_AS(parse_split_file("0\ttrain\t99\n", 12), FormatError);
  CHECK_THROWS_AS(parse_split_file("0\tvalid\t1\n", 12), FormatError);
  CHECK_THROWS_AS(parse_split_file("0\ttrain\t1\n0\ttest\t1\n", 12), FormatError);
  CHECK_THROWS_AS(parse_split_file("1\ttrain\t1\n", 12), FormatError);
}

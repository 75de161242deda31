#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.h"
#include "taglab/container.h"
#include "taglab/error.h"

using namespace taglab;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("taglab_container_" + name);
}

Corpus data() { return testing::suffix_corpus(30, 12, 40); }

std::vector<AnyModel> all_models() {
  Corpus c = data();
  std::vector<AnyModel> out;
  out.emplace_back(fit_major(c));
  out.emplace_back(fit_memo(c));
  CrfConfig cc;
  cc.max_epochs = 2;
  out.emplace_back(train_crf(cc, c, c).model);
  NeuralConfig nc;
  apply_feature_list(nc, "words,chars,prefix,suffix");
  nc.word_dim = 8;
  nc.affix_dim = 3;
  nc.char_dim = 4;
  nc.char_filters = 4;
  nc.hidden = 6;
  nc.filter_widths = {2, 3};
  TrainConfig tc;
  tc.max_epochs = 2;
  VocabOptions vo;
  vo.word_min = 1;
  vo.affix_min = 1;
  out.emplace_back(train_neural(nc, tc, vo, c, c).model);
  return out;
}

}  // namespace

TEST_CASE("saved models reload with identical predictions") {
  Corpus test = testing::suffix_corpus(10, 99, 60);
  test.push_back({{"NeverSeenWord", "Ünïcode"}, {}});
  for (const auto& m : all_models()) {
    CAPTURE(model_kind(m));
    const auto path = temp_path(model_kind(m));
    save_model(path, m);
    AnyModel back = load_model(path, model_kind(m));
    CHECK(std::string(model_kind(back)) == model_kind(m));
    for (const auto& s : test) CHECK(predict(back, s) == predict(m, s));
    // Serialising the reloaded model reproduces the bytes.
    CHECK(serialize_container(to_container(back)) == serialize_container(to_container(m)));
    std::filesystem::remove(path);
  }
}

TEST_CASE("parameter values survive bit-exactly") {
  ModelContainer c;
  c.kind = "test";
  c.meta = {{"x", 1}};
  c.blocks.push_back({"w", {2, 2}, {0.1, -0.0, 1e-300, 123456.789}});
  c.blocks.push_back({"v", {3}, {std::numeric_limits<double>::denorm_min(), 1.0 / 3.0, -2.5}});
  auto back = parse_container(serialize_container(c));
  REQUIRE(back.blocks.size() == 2);
  for (std::size_t b = 0; b < 2; ++b) {
    CHECK(back.blocks[b].name == c.blocks[b].name);
    CHECK(back.blocks[b].shape == c.blocks[b].shape);
    for (std::size_t i = 0; i < c.blocks[b].values.size(); ++i)
      CHECK(std::bit_cast<std::uint64_t>(back.blocks[b].values[i]) == std::bit_cast<std::uint64_t>(c.blocks[b].values[i]));
  }
  CHECK(back.meta == c.meta);
}

TEST_CASE("corrupt containers are rejected") {
  ModelContainer c;
  c.kind = "major";
  c.meta = {{"baseline", "MAJOR NN\n"}};
  c.blocks.push_back({"w", {4}, {1, 2, 3, 4}});
  const std::string good = serialize_container(c);
  CHECK_NOTHROW(parse_container(good));
  for (std::size_t cut : {good.size() - 1, good.size() - 5, good.size() / 2, std::size_t{3}, std::size_t{0}})
    CHECK_THROWS_AS(parse_container(good.substr(0, cut)), FormatError);

  std::string magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_container(magic), FormatError);
  std::string version = good;
  version.replace(version.find(" 1\n"), 3, " 9\n");
  CHECK_THROWS_AS(parse_container(version), FormatError);
}

TEST_CASE("loading the wrong kind or a missing file fails") {
  const auto path = temp_path("kind");
  save_model(path, AnyModel(fit_major(data())));
  CHECK_THROWS_AS(load_model(path, "crf"), FormatError);
  CHECK_NOTHROW(load_model(path, "major"));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), IoError);
}

TEST_CASE("neural config and vocabulary JSON round-trip") {
  NeuralConfig c;
  apply_feature_list(c, "words,suffix");
  c.encoder = Encoder::kFeedforward;
  c.filter_widths = {2, 4};
  c.lowercase_mode = LowercaseMode::kPreserve;
  NeuralConfig back = neural_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  Vocabulary v = build_vocabulary(data());
  Vocabulary vb = vocabulary_from_json(to_json(v));
  CHECK(vb.words.symbols() == v.words.symbols());
  CHECK(vb.chars.symbols() == v.chars.symbols());
  CHECK(vb.tags.symbols() == v.tags.symbols());
  CHECK(vb.affixes[3].symbols() == v.affixes[3].symbols());
  CHECK(vb.lowercase_words == v.lowercase_words);
}

#include "taglab/container.h"

#include <bit>
#include <cstring>
#include <sstream>

#include "taglab/error.h"

namespace taglab {

using json = nlohmann::ordered_json;

namespace {

void append_double(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double read_double(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::string line() {
    auto nl = data_.find('\n', pos_);
    if (nl == std::string_view::npos) throw FormatError("model file truncated");
    std::string s(data_.substr(pos_, nl - pos_));
    pos_ = nl + 1;
    return s;
  }

  std::string_view bytes(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError("model file truncated");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void expect_newline() {
    if (bytes(1) != "\n") throw FormatError("model file corrupt: missing block terminator");
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::size_t parse_size(const std::string& s) {
  std::size_t idx = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &idx);
  } catch (const std::exception&) {
    throw FormatError("model file corrupt: bad number '" + s + "'");
  }
  if (idx != s.size()) throw FormatError("model file corrupt: bad number '" + s + "'");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

std::string serialize_container(const ModelContainer& c) {
  std::string out = std::string(kContainerMagic) + " " + std::to_string(kContainerVersion) + "\n";
  out += "kind " + c.kind + "\n";
  const std::string meta = c.meta.dump();
  out += "meta " + std::to_string(meta.size()) + "\n" + meta + "\n";
  for (const auto& b : c.blocks) {
    out += "block " + b.name + " " + std::to_string(b.shape.size());
    for (auto d : b.shape) out += " " + std::to_string(d);
    out += " " + std::to_string(b.values.size()) + "\n";
    for (double v : b.values) append_double(out, v);
    out += "\n";
  }
  out += "end\n";
  return out;
}

ModelContainer parse_container(std::string_view bytes) {
  Reader r(bytes);
  auto head = words(r.line());
  if (head.size() != 2 || head[0] != kContainerMagic) throw FormatError("not a taglab model file (bad magic)");
  if (head[1] != std::to_string(kContainerVersion))
    throw FormatError("unsupported model format version " + head[1] + " (expected " + std::to_string(kContainerVersion) + ")");
  ModelContainer c;
  auto kind = words(r.line());
  if (kind.size() != 2 || kind[0] != "kind") throw FormatError("model file corrupt: missing kind");
  c.kind = kind[1];
  auto meta = words(r.line());
  if (meta.size() != 2 || meta[0] != "meta") throw FormatError("model file corrupt: missing metadata");
  auto meta_bytes = r.bytes(parse_size(meta[1]));
  r.expect_newline();
  try {
    c.meta = json::parse(meta_bytes);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file corrupt: ") + e.what());
  }
  while (true) {
    auto w = words(r.line());
    if (w.size() == 1 && w[0] == "end") break;
    if (w.size() < 4 || w[0] != "block") throw FormatError("model file corrupt: expected block header");
    ModelContainer::Block b;
    b.name = w[1];
    const auto rank = parse_size(w[2]);
    if (w.size() != 4 + rank) throw FormatError("model file corrupt: bad block header for " + b.name);
    std::size_t expected = 1;
    for (std::size_t i = 0; i < rank; ++i) {
      b.shape.push_back(parse_size(w[3 + i]));
      expected *= b.shape.back();
    }
    const auto count = parse_size(w[3 + rank]);
    if (count != expected) throw FormatError("model file corrupt: block " + b.name + " size disagrees with shape");
    auto payload = r.bytes(count * 8);
    r.expect_newline();
    b.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) b.values[i] = read_double(payload.data() + 8 * i);
    c.blocks.push_back(std::move(b));
  }
  return c;
}

json to_json(const NeuralConfig& c) {
  json j;
  j["features"] = feature_list(c);
  j["encoder"] = to_string(c.encoder);
  j["predictor"] = to_string(c.predictor);
  j["window"] = c.window;
  j["dropout"] = c.dropout;
  j["filter_widths"] = c.filter_widths;
  j["word_dim"] = c.word_dim;
  j["affix_dim"] = c.affix_dim;
  j["char_dim"] = c.char_dim;
  j["char_filters"] = c.char_filters;
  j["hidden"] = c.hidden;
  j["lowercase_mode"] = c.lowercase_mode == LowercaseMode::kLookup ? "lookup" : "preserve";
  return j;
}

NeuralConfig neural_config_from_json(const json& j) {
  try {
    NeuralConfig c;
    apply_feature_list(c, j.at("features").get<std::string>());
    c.encoder = parse_encoder(j.at("encoder").get<std::string>());
    c.predictor = parse_predictor(j.at("predictor").get<std::string>());
    c.window = j.at("window").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.filter_widths = j.at("filter_widths").get<std::vector<int>>();
    c.word_dim = j.at("word_dim").get<std::size_t>();
    c.affix_dim = j.at("affix_dim").get<std::size_t>();
    c.char_dim = j.at("char_dim").get<std::size_t>();
    c.char_filters = j.at("char_filters").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.lowercase_mode = j.at("lowercase_mode").get<std::string>() == "preserve" ? LowercaseMode::kPreserve : LowercaseMode::kLookup;
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad neural config: ") + e.what());
  }
}

json to_json(const TrainConfig& c) {
  json j;
  j["batch_size"] = c.batch_size;
  j["clip_norm"] = c.clip_norm;
  j["patience_epochs"] = c.patience_epochs;
  j["max_decays"] = c.max_decays;
  j["initial_lr"] = c.initial_lr;
  j["seed"] = c.seed;
  j["max_epochs"] = c.max_epochs;
  return j;
}

json to_json(const CrfConfig& c) {
  json j;
  j["window"] = c.window;
  j["l2"] = c.l2;
  j["lr"] = c.lr;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  j["feature_cutoff"] = c.feature_cutoff;
  j["batch_size"] = c.batch_size;
  j["clip_norm"] = c.clip_norm;
  j["init_range"] = c.init_range;
  return j;
}

json to_json(const Vocabulary& v) {
  json j;
  j["lowercase_words"] = v.lowercase_words;
  j["words"] = v.words.symbols();
  json affix;
  for (int k = 0; k < kNumAffixKinds; ++k) affix[affix_name(static_cast<AffixKind>(k))] = v.affixes[k].symbols();
  j["affixes"] = affix;
  j["chars"] = v.chars.symbols();
  j["tags"] = v.tags.symbols();
  return j;
}

Vocabulary vocabulary_from_json(const json& j) {
  try {
    Vocabulary v;
    v.lowercase_words = j.at("lowercase_words").get<bool>();
    v.words = SymbolTable::from_symbols(j.at("words").get<std::vector<std::string>>(), true);
    for (int k = 0; k < kNumAffixKinds; ++k)
      v.affixes[k] = SymbolTable::from_symbols(
          j.at("affixes").at(affix_name(static_cast<AffixKind>(k))).get<std::vector<std::string>>(), true);
    v.chars = SymbolTable::from_symbols(j.at("chars").get<std::vector<std::string>>(), true);
    v.tags = SymbolTable::from_symbols(j.at("tags").get<std::vector<std::string>>(), false);
    return v;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad vocabulary: ") + e.what());
  }
}

const char* model_kind(const AnyModel& model) {
  switch (model.index()) {
    case 0: return "major";
    case 1: return "memo";
    case 2: return "crf";
    default: return "neural";
  }
}

namespace {

void store_blocks(ModelContainer& c, const ParamStore& params) {
  for (std::size_t i = 0; i < params.size(); ++i)
    c.blocks.push_back({params.names()[i], params.at(i).shape, params.at(i).value});
}

void load_blocks(const ModelContainer& c, ParamStore& params) {
  if (c.blocks.size() != params.size()) throw FormatError("model file has " + std::to_string(c.blocks.size()) +
                                                          " parameter blocks, expected " + std::to_string(params.size()));
  for (const auto& b : c.blocks) {
    if (!params.contains(b.name)) throw FormatError("unexpected parameter block " + b.name);
    Tensor& t = params.get(b.name);
    if (t.shape != b.shape) throw FormatError("parameter block " + b.name + " has the wrong shape");
    t.value = b.values;
  }
}

}  // namespace

ModelContainer to_container(const AnyModel& model) {
  ModelContainer c;
  c.kind = model_kind(model);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MajorModel> || std::is_same_v<T, MemoModel>) {
          c.meta["baseline"] = format_baseline(m);
        } else if constexpr (std::is_same_v<T, CrfModel>) {
          c.meta["window"] = m.window;
          c.meta["l2"] = m.l2;
          c.meta["tags"] = m.tags;
          c.meta["features"] = m.features.features();
          store_blocks(c, m.params);
        } else {
          c.meta["config"] = to_json(m.config);
          c.meta["vocabulary"] = to_json(m.vocab);
          store_blocks(c, m.params);
        }
      },
      model);
  return c;
}

AnyModel from_container(const ModelContainer& c) {
  try {
    if (c.kind == "major") return parse_major(c.meta.at("baseline").get<std::string>());
    if (c.kind == "memo") return parse_memo(c.meta.at("baseline").get<std::string>());
    if (c.kind == "crf") {
      FeatureIndex features;
      for (const auto& f : c.meta.at("features")) features.add(f.get<std::string>());
      CrfModel m = make_crf_model(std::move(features), c.meta.at("tags").get<std::vector<std::string>>(),
                                  c.meta.at("window").get<int>(), c.meta.at("l2").get<double>());
      load_blocks(c, m.params);
      return m;
    }
    if (c.kind == "neural") {
      TaggerModel m = make_tagger(neural_config_from_json(c.meta.at("config")), vocabulary_from_json(c.meta.at("vocabulary")), 0);
      load_blocks(c, m.params);
      return m;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("model metadata corrupt: ") + e.what());
  }
  throw FormatError("unknown model kind '" + c.kind + "'");
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
  write_text_file(path, serialize_container(to_container(model)));
}

AnyModel load_model(const std::filesystem::path& path) { return from_container(parse_container(read_text_file(path))); }

AnyModel load_model(const std::filesystem::path& path, std::string_view expected_kind) {
  ModelContainer c = parse_container(read_text_file(path));
  if (c.kind != expected_kind)
    throw FormatError("model kind mismatch: file holds '" + c.kind + "', expected '" + std::string(expected_kind) + "'");
  return from_container(c);
}

std::vector<std::string> predict(const AnyModel& model, const TaggedSentence& sentence) {
  return std::visit(
      [&](const auto& m) -> std::vector<std::string> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CrfModel>) return predict_crf(m, sentence);
        else if constexpr (std::is_same_v<T, TaggerModel>) return tag_sentence(m, sentence);
        else return predict_baseline(m, sentence);
      },
      model);
}

}  // namespace taglab

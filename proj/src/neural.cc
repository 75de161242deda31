#include "taglab/neural.h"

#include <algorithm>
#include <sstream>

#include "taglab/error.h"
#include "taglab/evaluation.h"

namespace taglab {

const char* to_string(Encoder e) { return e == Encoder::kFeedforward ? "ff" : "bilstm"; }
const char* to_string(Predictor p) { return p == Predictor::kSoftmax ? "softmax" : "crf"; }

Encoder parse_encoder(const std::string& s) {
  if (s == "ff" || s == "feedforward") return Encoder::kFeedforward;
  if (s == "bilstm") return Encoder::kBiLstm;
  throw UsageError("unknown encoder '" + s + "' (expected ff or bilstm)");
}

Predictor parse_predictor(const std::string& s) {
  if (s == "softmax") return Predictor::kSoftmax;
  if (s == "crf") return Predictor::kCrf;
  throw UsageError("unknown predictor '" + s + "' (expected softmax or crf)");
}

std::size_t NeuralConfig::embedding_dim() const {
  std::size_t d = word_dim;
  if (use_prefix) d += 2 * affix_dim;
  if (use_suffix) d += 2 * affix_dim;
  if (use_chars) d += char_filters * filter_widths.size();
  return d;
}

bool NeuralConfig::lowercase_words() const { return !(use_chars && lowercase_mode == LowercaseMode::kPreserve); }

void NeuralConfig::validate() const {
  if (window < 0) throw UsageError("window must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
  if (use_chars && filter_widths.empty()) throw UsageError("character features need at least one filter width");
  for (int w : filter_widths)
    if (w < 1) throw UsageError("filter widths must be positive");
  if (word_dim == 0 || hidden == 0 || (use_chars && (char_dim == 0 || char_filters == 0)) ||
      ((use_prefix || use_suffix) && affix_dim == 0))
    throw UsageError("dimensions must be positive");
}

void apply_feature_list(NeuralConfig& config, const std::string& features) {
  config.use_prefix = config.use_suffix = config.use_chars = false;
  bool words = false;
  std::stringstream ss(features);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "words") words = true;
    else if (item == "prefix") config.use_prefix = true;
    else if (item == "suffix") config.use_suffix = true;
    else if (item == "chars") config.use_chars = true;
    else throw UsageError("unknown feature '" + item + "' (expected words, prefix, suffix, chars)");
  }
  if (!words) throw UsageError("the feature list must include words");
}

std::string feature_list(const NeuralConfig& config) {
  std::string s = "words";
  if (config.use_chars) s += ",chars";
  if (config.use_prefix) s += ",prefix";
  if (config.use_suffix) s += ",suffix";
  return s;
}

namespace {

const char* kAffixParam[kNumAffixKinds] = {"p2_emb", "p3_emb", "s2_emb", "s3_emb"};

std::string cnn_weight(int w) { return "cnn_w" + std::to_string(w); }
std::string cnn_bias(int w) { return "cnn_b" + std::to_string(w); }

bool affix_enabled(const NeuralConfig& c, int kind) {
  return kind < 2 ? c.use_prefix : c.use_suffix;
}

void add_lstm(ParamStore& p, const std::string& prefix, std::size_t in, std::size_t hidden, std::mt19937_64& rng) {
  Tensor& w = p.add(prefix + "_w", {4 * hidden, in + hidden});
  init_dense(w, rng);
  Tensor& b = p.add(prefix + "_b", {4 * hidden});
  // Gate layout: input, forget, candidate, output.
  std::fill(b.value.begin() + static_cast<std::ptrdiff_t>(hidden), b.value.begin() + static_cast<std::ptrdiff_t>(2 * hidden), 1.0);
}

}  // namespace

TaggerModel make_tagger(const NeuralConfig& config, Vocabulary vocab, std::uint64_t seed) {
  config.validate();
  if (vocab.tags.size() == 0) throw UsageError("vocabulary has no tags");
  TaggerModel m;
  m.config = config;
  m.vocab = std::move(vocab);
  std::mt19937_64 rng(seed);
  ParamStore& p = m.params;
  const auto K = m.num_tags();

  init_embedding(p.add("word_emb", {m.vocab.words.size(), config.word_dim}), rng);
  for (int k = 0; k < kNumAffixKinds; ++k)
    if (affix_enabled(config, k)) init_embedding(p.add(kAffixParam[k], {m.vocab.affixes[k].size(), config.affix_dim}), rng);
  if (config.use_chars) {
    init_embedding(p.add("char_emb", {m.vocab.chars.size(), config.char_dim}), rng);
    for (int w : config.filter_widths) {
      init_dense(p.add(cnn_weight(w), {config.char_filters, static_cast<std::size_t>(w) * config.char_dim}), rng);
      p.add(cnn_bias(w), {config.char_filters});
    }
  }
  const auto E = config.embedding_dim();
  std::size_t ff_in;
  if (config.encoder == Encoder::kBiLstm) {
    add_lstm(p, "lstm_fwd", E, config.hidden, rng);
    add_lstm(p, "lstm_bwd", E, config.hidden, rng);
    ff_in = 2 * config.hidden;
  } else {
    ff_in = static_cast<std::size_t>(2 * config.window + 1) * E;
  }
  init_dense(p.add("ff_w1", {config.hidden, ff_in}), rng);
  p.add("ff_b1", {config.hidden});
  init_dense(p.add("ff_w2", {K, config.hidden}), rng);
  p.add("ff_b2", {K});
  if (config.predictor == Predictor::kCrf) {
    p.add("crf_trans", {K, K});
    p.add("crf_start", {K});
    p.add("crf_end", {K});
  }
  return m;
}

ad::Expr Dropout::apply(ad::Expr x) const {
  if (!active()) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> m(x.dim());
  for (auto& v : m) v = keep(*rng) ? scale : 0.0;
  return ad::mask(x, std::move(m));
}

ad::Expr char_cnn(TaggerModel& model, ad::Graph& graph, std::span<const int> char_ids) {
  const auto& c = model.config;
  if (char_ids.empty()) throw std::invalid_argument("char_cnn: empty character sequence");
  const int widest = *std::max_element(c.filter_widths.begin(), c.filter_widths.end());
  std::vector<int> ids(char_ids.begin(), char_ids.end());
  if (ids.size() < static_cast<std::size_t>(widest)) ids.resize(static_cast<std::size_t>(widest), SymbolTable::kPad);

  Tensor& table = model.params.get("char_emb");
  std::vector<ad::Expr> emb;
  emb.reserve(ids.size());
  for (int id : ids) emb.push_back(graph.lookup(table, id));

  std::vector<ad::Expr> blocks;
  for (int w : c.filter_widths) {
    Tensor& weight = model.params.get(cnn_weight(w));
    Tensor& bias = model.params.get(cnn_bias(w));
    const auto uw = static_cast<std::size_t>(w);
    std::vector<ad::Expr> responses;
    for (std::size_t i = 0; i + uw <= emb.size(); ++i) {
      ad::Expr window = uw == 1 ? emb[i] : ad::concat(std::span<const ad::Expr>(emb.data() + i, uw));
      responses.push_back(ad::relu(ad::affine(weight, bias, window)));
    }
    blocks.push_back(ad::max_pool(responses));
  }
  return blocks.size() == 1 ? blocks[0] : ad::concat(blocks);
}

namespace {

ad::Expr embed_one(TaggerModel& model, ad::Graph& graph, int word, const std::array<int, kNumAffixKinds>& affix_ids,
                   std::span<const int> chars, const Dropout& dropout) {
  const auto& c = model.config;
  std::vector<ad::Expr> parts;
  parts.push_back(dropout.apply(graph.lookup(model.params.get("word_emb"), word)));
  for (int k = 0; k < kNumAffixKinds; ++k)
    if (affix_enabled(c, k)) parts.push_back(dropout.apply(graph.lookup(model.params.get(kAffixParam[k]), affix_ids[k])));
  if (c.use_chars) parts.push_back(dropout.apply(char_cnn(model, graph, chars)));
  return parts.size() == 1 ? parts[0] : ad::concat(parts);
}

// Output layer shared by both encoders.
ad::Expr output_layer(TaggerModel& model, ad::Expr input, const Dropout& dropout) {
  ad::Expr h = ad::tanh(ad::affine(model.params.get("ff_w1"), model.params.get("ff_b1"), input));
  return ad::affine(model.params.get("ff_w2"), model.params.get("ff_b2"), dropout.apply(h));
}

std::vector<ad::Expr> run_lstm(TaggerModel& model, ad::Graph& graph, std::span<const ad::Expr> x, const std::string& prefix,
                               bool reverse) {
  const auto H = model.config.hidden;
  Tensor& w = model.params.get(prefix + "_w");
  Tensor& b = model.params.get(prefix + "_b");
  const auto n = x.size();
  std::vector<ad::Expr> out(n);
  ad::Expr h = graph.constant(std::vector<double>(H, 0.0));
  ad::Expr cell = graph.constant(std::vector<double>(H, 0.0));
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    ad::Expr in[] = {x[t], h};
    ad::Expr gates = ad::affine(w, b, ad::concat(in));
    ad::Expr i = ad::sigmoid(ad::slice(gates, 0, H));
    ad::Expr f = ad::sigmoid(ad::slice(gates, H, H));
    ad::Expr g = ad::tanh(ad::slice(gates, 2 * H, H));
    ad::Expr o = ad::sigmoid(ad::slice(gates, 3 * H, H));
    cell = ad::add(ad::cmul(f, cell), ad::cmul(i, g));
    h = ad::cmul(o, ad::tanh(cell));
    out[t] = h;
  }
  return out;
}

}  // namespace

std::vector<ad::Expr> embed_tokens(TaggerModel& model, ad::Graph& graph, const EncodedSentence& sentence,
                                   const Dropout& dropout) {
  std::vector<ad::Expr> xs;
  xs.reserve(sentence.size());
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    std::array<int, kNumAffixKinds> a{};
    for (int k = 0; k < kNumAffixKinds; ++k) a[k] = sentence.affixes[k][t];
    xs.push_back(embed_one(model, graph, sentence.words[t], a, sentence.chars[t], dropout));
  }
  return xs;
}

ad::Expr embed_padding(TaggerModel& model, ad::Graph& graph, const Dropout& dropout) {
  const std::array<int, kNumAffixKinds> a{SymbolTable::kPad, SymbolTable::kPad, SymbolTable::kPad, SymbolTable::kPad};
  const int pad_char[] = {SymbolTable::kPad};
  return embed_one(model, graph, SymbolTable::kPad, a, pad_char, dropout);
}

std::vector<ad::Expr> encode_ff(TaggerModel& model, ad::Graph& /*graph*/, std::span<const ad::Expr> x, ad::Expr pad,
                                const Dropout& dropout) {
  const int d = model.config.window;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<ad::Expr> out;
  out.reserve(x.size());
  std::vector<ad::Expr> window;
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    window.clear();
    for (std::ptrdiff_t o = -d; o <= d; ++o) {
      const auto pos = t + o;
      window.push_back(pos < 0 || pos >= n ? pad : x[static_cast<std::size_t>(pos)]);
    }
    ad::Expr z = window.size() == 1 ? window[0] : ad::concat(window);
    out.push_back(output_layer(model, z, dropout));
  }
  return out;
}

std::vector<ad::Expr> bilstm_states(TaggerModel& model, ad::Graph& graph, std::span<const ad::Expr> x) {
  auto fwd = run_lstm(model, graph, x, "lstm_fwd", false);
  auto bwd = run_lstm(model, graph, x, "lstm_bwd", true);
  std::vector<ad::Expr> h;
  h.reserve(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    ad::Expr both[] = {fwd[t], bwd[t]};
    h.push_back(ad::concat(both));
  }
  return h;
}

std::vector<ad::Expr> encode_bilstm(TaggerModel& model, ad::Graph& graph, std::span<const ad::Expr> x,
                                    const Dropout& dropout) {
  std::vector<ad::Expr> dropped;
  dropped.reserve(x.size());
  for (auto e : x) dropped.push_back(dropout.apply(e));
  auto h = bilstm_states(model, graph, dropped);
  std::vector<ad::Expr> out;
  out.reserve(h.size());
  for (auto e : h) out.push_back(output_layer(model, e, dropout));
  return out;
}

SentenceResult loss_and_decode(TaggerModel& model, ad::Graph& graph, const EncodedSentence& sentence,
                               std::mt19937_64* rng) {
  if (sentence.size() == 0) return {};
  const Dropout dropout{model.config.dropout, rng};
  auto x = embed_tokens(model, graph, sentence, dropout);
  std::vector<ad::Expr> o;
  if (model.config.encoder == Encoder::kFeedforward) {
    ad::Expr pad = embed_padding(model, graph, dropout);
    o = encode_ff(model, graph, x, pad, dropout);
  } else {
    o = encode_bilstm(model, graph, x, dropout);
  }

  SentenceResult r;
  const auto K = model.num_tags();
  for (auto e : o) r.scores.push_back(e.value());
  if (model.config.predictor == Predictor::kSoftmax) {
    for (const auto& s : r.scores) r.prediction.push_back(argmax(s));
  } else {
    Lattice L(o.size(), K);
    for (std::size_t t = 0; t < o.size(); ++t) std::copy(r.scores[t].begin(), r.scores[t].end(), L.state.begin() + static_cast<std::ptrdiff_t>(t * K));
    L.trans = model.params.get("crf_trans").value;
    L.start = model.params.get("crf_start").value;
    L.end = model.params.get("crf_end").value;
    r.prediction = viterbi(L).path;
  }

  if (!sentence.tags.empty()) {
    if (sentence.tags.size() != sentence.size()) throw std::invalid_argument("gold tag count mismatch");
    if (model.config.predictor == Predictor::kSoftmax) {
      std::vector<ad::Expr> terms;
      for (std::size_t t = 0; t < o.size(); ++t) terms.push_back(ad::neg_log_softmax(o[t], sentence.tags[t]));
      r.loss = ad::sum(terms);
    } else {
      r.loss = ad::crf_nll(o, model.params.get("crf_trans"), model.params.get("crf_start"), model.params.get("crf_end"),
                           sentence.tags);
    }
  }
  return r;
}

// Building a graph needs mutable tensor references, but a graph that is never
// differentiated only reads them.
double sentence_loss(const TaggerModel& model, const EncodedSentence& sentence) {
  ad::Graph graph;
  auto r = loss_and_decode(const_cast<TaggerModel&>(model), graph, sentence);
  if (!r.loss) throw std::invalid_argument("sentence_loss: sentence has no gold tags");
  return r.loss->value()[0];
}

double sentence_loss_grad(TaggerModel& model, const EncodedSentence& sentence) {
  ad::Graph graph;
  auto r = loss_and_decode(model, graph, sentence);
  if (!r.loss) throw std::invalid_argument("sentence_loss_grad: sentence has no gold tags");
  graph.backward(*r.loss);
  return r.loss->value()[0];
}

TagPath decode(const TaggerModel& model, const EncodedSentence& sentence) {
  ad::Graph graph;
  EncodedSentence untagged = sentence;
  untagged.tags.clear();
  return loss_and_decode(const_cast<TaggerModel&>(model), graph, untagged).prediction;
}

std::vector<std::string> tag_sentence(const TaggerModel& model, const TaggedSentence& sentence) {
  TaggedSentence untagged{sentence.tokens, {}};
  TagPath path = decode(model, encode_sentence(model.vocab, untagged));
  std::vector<std::string> out;
  out.reserve(path.size());
  for (int y : path) out.push_back(model.vocab.tags.symbol(y));
  return out;
}

double dev_weighted_f1(const TaggerModel& model, std::span<const EncodedSentence> dev) {
  const auto& tags = model.vocab.tags.symbols();
  TagSequences gold, pred;
  for (const auto& s : dev) {
    std::vector<std::string> g, p;
    for (int y : s.tags) g.push_back(tags[static_cast<std::size_t>(y)]);
    for (int y : decode(model, s)) p.push_back(tags[static_cast<std::size_t>(y)]);
    gold.push_back(std::move(g));
    pred.push_back(std::move(p));
  }
  return tag_report(confusion(gold, pred, tags)).weighted_f1;
}

NeuralTrainResult train_neural(const NeuralConfig& config, const TrainConfig& train_config,
                               const VocabOptions& vocab_options, std::span<const TaggedSentence> train,
                               std::span<const TaggedSentence> dev) {
  if (train.empty()) throw UsageError("train_neural: empty training set");
  if (dev.empty()) throw UsageError("train_neural: empty dev set");
  VocabOptions vo = vocab_options;
  vo.lowercase_words = config.lowercase_words();
  TaggerModel model = make_tagger(config, build_vocabulary(train, vo), train_config.seed);

  std::vector<EncodedSentence> train_enc, dev_enc;
  for (const auto& s : train) {
    if (!s.tagged()) throw UsageError("train_neural: training sentence without tags");
    train_enc.push_back(encode_sentence(model.vocab, s));
  }
  for (const auto& s : dev) dev_enc.push_back(encode_sentence(model.vocab, s));

  auto batch_loss = [&](std::span<const std::size_t> ids, std::mt19937_64& rng) {
    const double scale = 1.0 / static_cast<double>(ids.size());
    double total = 0.0;
    for (auto id : ids) {
      ad::Graph graph;
      auto r = loss_and_decode(model, graph, train_enc[id], &rng);
      total += r.loss->value()[0];
      graph.backward(ad::scale(*r.loss, scale));
    }
    return total * scale;
  };
  auto dev_score = [&] { return dev_weighted_f1(model, dev_enc); };
  TrainResult tr = train_loop(model.params, train_config, train_enc.size(), batch_loss, dev_score);
  return {std::move(model), std::move(tr)};
}

}  // namespace taglab

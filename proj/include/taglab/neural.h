#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "taglab/autodiff.h"
#include "taglab/corpus.h"
#include "taglab/lattice.h"
#include "taglab/params.h"
#include "taglab/training.h"

namespace taglab {

enum class Encoder { kFeedforward, kBiLstm };
enum class Predictor { kSoftmax, kCrf };

const char* to_string(Encoder e);
const char* to_string(Predictor p);
Encoder parse_encoder(const std::string& s);
Predictor parse_predictor(const std::string& s);

struct NeuralConfig {
  bool use_prefix = false;
  bool use_suffix = false;
  bool use_chars = false;
  Encoder encoder = Encoder::kBiLstm;
  Predictor predictor = Predictor::kCrf;
  int window = 2;  // feedforward context on each side
  double dropout = 0.5;
  std::vector<int> filter_widths{3};
  std::size_t word_dim = 100;
  std::size_t affix_dim = 20;
  std::size_t char_dim = 30;
  std::size_t char_filters = 30;  // per width
  std::size_t hidden = 100;       // feedforward hidden units and LSTM units per direction
  LowercaseMode lowercase_mode = LowercaseMode::kLookup;

  // word_dim + affix_dim per enabled affix table + char_filters per width.
  std::size_t embedding_dim() const;
  // Whether word and affix lookups are lowercased under this configuration.
  bool lowercase_words() const;
  void validate() const;
};

// "words", "words,chars", "words,chars,prefix,suffix", ...
void apply_feature_list(NeuralConfig& config, const std::string& features);
std::string feature_list(const NeuralConfig& config);

// Parameter names: word_emb, p2_emb, p3_emb, s2_emb, s3_emb, char_emb,
// cnn_w<width>, cnn_b<width>, lstm_fwd_w/b, lstm_bwd_w/b, ff_w1, ff_b1,
// ff_w2, ff_b2, crf_trans, crf_start, crf_end.
struct TaggerModel {
  NeuralConfig config;
  Vocabulary vocab;
  ParamStore params;

  std::size_t num_tags() const { return vocab.tags.size(); }
};

// Allocates and initialises every tensor the configuration needs.
TaggerModel make_tagger(const NeuralConfig& config, Vocabulary vocab, std::uint64_t seed);

// Inverted dropout; a no-op when inactive or p == 0.
struct Dropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;

  bool active() const { return rng != nullptr && rate > 0.0; }
  ad::Expr apply(ad::Expr x) const;
};

// Max-pooled convolutions over character embeddings, one block of
// char_filters outputs per width, rectified before pooling. Words shorter
// than the widest filter are right-padded with the PAD character.
ad::Expr char_cnn(TaggerModel& model, ad::Graph& graph, std::span<const int> char_ids);

// x_t for every position: word embedding, then p2,p3 / s2,s3 / char CNN
// blocks as enabled. Dropout applies to each block.
std::vector<ad::Expr> embed_tokens(TaggerModel& model, ad::Graph& graph, const EncodedSentence& sentence,
                                   const Dropout& dropout);
// The embedding of an all-PAD token, used beyond sentence boundaries.
ad::Expr embed_padding(TaggerModel& model, ad::Graph& graph, const Dropout& dropout);

// o_t = W2 (tanh(W1 z_t + b1) * r_t) + b2 over windows z_t of 2d+1 inputs.
std::vector<ad::Expr> encode_ff(TaggerModel& model, ad::Graph& graph, std::span<const ad::Expr> x, ad::Expr pad,
                                const Dropout& dropout);
// Forward and backward LSTM states concatenated, then the same output layer.
std::vector<ad::Expr> encode_bilstm(TaggerModel& model, ad::Graph& graph, std::span<const ad::Expr> x,
                                    const Dropout& dropout);
// Raw per-direction LSTM states (before the output layer).
std::vector<ad::Expr> bilstm_states(TaggerModel& model, ad::Graph& graph, std::span<const ad::Expr> x);

struct SentenceResult {
  std::optional<ad::Expr> loss;
  TagPath prediction;
  std::vector<std::vector<double>> scores;  // o_t values
};

// Full forward pass. The loss is recorded when the sentence has gold tags.
// Dropout is active only when `rng` is given.
SentenceResult loss_and_decode(TaggerModel& model, ad::Graph& graph, const EncodedSentence& sentence,
                               std::mt19937_64* rng = nullptr);

// Eval-mode loss value; the sentence must be tagged.
double sentence_loss(const TaggerModel& model, const EncodedSentence& sentence);
// Eval-mode loss, accumulating its gradient into model.params.
double sentence_loss_grad(TaggerModel& model, const EncodedSentence& sentence);

TagPath decode(const TaggerModel& model, const EncodedSentence& sentence);
std::vector<std::string> tag_sentence(const TaggerModel& model, const TaggedSentence& sentence);

struct NeuralTrainResult {
  TaggerModel model;
  TrainResult training;
};

NeuralTrainResult train_neural(const NeuralConfig& config, const TrainConfig& train_config,
                               const VocabOptions& vocab_options, std::span<const TaggedSentence> train,
                               std::span<const TaggedSentence> dev);

double dev_weighted_f1(const TaggerModel& model, std::span<const EncodedSentence> dev);

}  // namespace taglab

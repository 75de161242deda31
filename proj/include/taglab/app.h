#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "taglab/container.h"
#include "taglab/corpus.h"
#include "taglab/crf.h"
#include "taglab/evaluation.h"
#include "taglab/neural.h"
#include "taglab/training.h"

namespace taglab::app {

// Everything a command needs, after the config file and flags are merged.
struct RunConfig {
  std::string command;
  std::string corpus, split, model, input, out, confusion, history, grid;
  int fold = -1;  // -1: every fold, where the command allows it
  int folds = 5;
  bool sample_std = true;  // fold spread with n-1 (false: n)
  std::string model_kind = "neural";
  std::uint64_t seed = 0;
  NeuralConfig neural;
  TrainConfig train;
  VocabOptions vocab;
  CrfConfig crf;

  RunConfig();
};

// Applies one `name=value` setting using the flag names (lr, dropout,
// window, l2, encoder, predictor, features, batch-size, clip, hidden,
// word-dim, max-epochs, filter-widths, seed).
void apply_setting(RunConfig& config, const std::string& name, const std::string& value);

// The settings that shape results; paths to outputs are left out.
nlohmann::ordered_json resolved_config(const RunConfig& config);

// "Major", "Memo", "CRF", "biLSTM + CRF", "Feedforward + softmax", ...
std::string method_label(const RunConfig& config);

struct TrainedModel {
  AnyModel model;
  TrainResult training;  // empty for the baselines
};

TrainedModel train_model(const RunConfig& config, std::span<const TaggedSentence> train,
                         std::span<const TaggedSentence> dev);

TagReport evaluate(const AnyModel& model, std::span<const TaggedSentence> sentences, ConfusionMatrix* matrix = nullptr);

std::vector<FoldSplit> load_or_make_split(const RunConfig& config, std::size_t n_sentences);

struct FoldResult {
  int fold = 0;
  double dev_f1 = 0.0;
  double test_f1 = 0.0;
  double test_accuracy = 0.0;
};

std::vector<FoldResult> run_crossval(const RunConfig& config, std::span<const TaggedSentence> corpus,
                                     std::span<const FoldSplit> folds, unsigned threads);
std::string crossval_report(const RunConfig& config, std::span<const FoldResult> results);

struct AblationRow {
  std::string label;
  std::string features;
  double dev_f1 = 0.0;  // mean over the folds used
  double delta = 0.0;   // against the previous row
};

// words, +chars, +prefix, +suffix, each row adding to the previous one.
std::vector<AblationRow> run_ablation(const RunConfig& config, std::span<const TaggedSentence> corpus,
                                      std::span<const FoldSplit> folds, unsigned threads);
std::string ablation_report(const RunConfig& config, std::span<const AblationRow> rows);

// Search space used by tune when none is given.
std::string default_grid(const RunConfig& config);

// `lr=0.001,0.01;dropout=0.25,0.5`; axes may also be separated by spaces.
std::vector<GridAxis> parse_grid(const std::string& text);

// Full command line (without the program name). Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace taglab::app

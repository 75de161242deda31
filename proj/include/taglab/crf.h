#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "taglab/corpus.h"
#include "taglab/lattice.h"
#include "taglab/params.h"
#include "taglab/training.h"

namespace taglab {

inline constexpr const char* kPadToken = "<pad>";

// Word and affix features of every position within `window` of t, e.g.
// `w[-1]=saya`, `p3[0]=mak`, `s3[+1]=asi`. Positions outside the sentence
// read the literal `<pad>`, whose affixes are `<pad>` too. Words are
// lowercased. Always 5 * (2 * window + 1) features.
std::vector<std::string> extract_features(const TaggedSentence& sentence, std::size_t t, int window);

class FeatureIndex {
 public:
  // -1 when absent.
  int lookup(const std::string& feature) const;
  int add(const std::string& feature);
  std::size_t size() const { return features_.size(); }
  const std::vector<std::string>& features() const { return features_; }

 private:
  std::vector<std::string> features_;
  std::unordered_map<std::string, int> index_;
};

// Every feature seen at least `cutoff` times in `train`, in first-seen order.
FeatureIndex build_feature_index(std::span<const TaggedSentence> train, int window, std::size_t cutoff = 1);

// Parameters live in `params`: "state" [F x K], "trans" [K x K], "start" [K]
// and "end" [K].
struct CrfModel {
  int window = 1;
  double l2 = 0.0;
  std::vector<std::string> tags;
  FeatureIndex features;
  ParamStore params;

  std::size_t num_tags() const { return tags.size(); }
  int tag_id(const std::string& tag) const;
};

// Zero-initialised model over the given features and tags.
CrfModel make_crf_model(FeatureIndex features, std::vector<std::string> tags, int window, double l2);

// A sentence reduced to active feature ids per position (unknown features
// dropped) and gold tag ids (empty when untagged).
struct CrfInstance {
  std::vector<std::vector<int>> features;
  std::vector<int> gold;
};

CrfInstance make_instance(const CrfModel& model, const TaggedSentence& sentence);

Lattice build_lattice(const CrfModel& model, const CrfInstance& instance);
Lattice build_lattice(const CrfModel& model, const TaggedSentence& sentence);

// Adds the gradient of
//   sum_s [logZ(s) - score(s, gold)] + reg_scale * (l2 / 2) * ||w||^2
// into model.params grads and returns that value. Only rows of features
// active in the batch receive data terms; the L2 term covers every weight.
double nll_grad(CrfModel& model, std::span<const CrfInstance> batch, double reg_scale = 1.0);
double nll_grad(CrfModel& model, std::span<const TaggedSentence> batch, double reg_scale = 1.0);

// Same objective, value only.
double nll(const CrfModel& model, std::span<const CrfInstance> batch, double reg_scale = 1.0);

struct CrfConfig {
  int window = 1;
  double l2 = 1e-3;
  double lr = 0.01;
  int max_epochs = 50;
  std::uint64_t seed = 0;
  std::size_t feature_cutoff = 1;
  std::size_t batch_size = 8;
  double clip_norm = 1.0;
  // Uniform init range for the weights; 0 starts from all zeros.
  double init_range = 0.0;
};

struct CrfTrainResult {
  CrfModel model;
  TrainResult training;
};

// Mini-batch Adam on the per-sentence-averaged objective (the L2 term is
// spread over batches in proportion to their size), keeping the epoch with
// the best dev weighted-F1.
CrfTrainResult train_crf(const CrfConfig& config, std::span<const TaggedSentence> train,
                         std::span<const TaggedSentence> dev);

std::vector<std::string> predict_crf(const CrfModel& model, const TaggedSentence& sentence);

}  // namespace taglab

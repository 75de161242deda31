#include "taglab/crf.h"

#include <algorithm>
#include <map>
#include <random>

#include "taglab/error.h"
#include "taglab/evaluation.h"

namespace taglab {

std::vector<std::string> extract_features(const TaggedSentence& sentence, std::size_t t, int window) {
  if (t >= sentence.size()) throw std::out_of_range("extract_features: position out of range");
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(5 * (2 * window + 1)));
  const auto n = static_cast<std::ptrdiff_t>(sentence.size());
  for (int o = -window; o <= window; ++o) {
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t) + o;
    const std::string offset = o > 0 ? "[+" + std::to_string(o) + "]=" : "[" + std::to_string(o) + "]=";
    if (pos < 0 || pos >= n) {
      for (const char* name : {"w", "p2", "p3", "s2", "s3"}) out.push_back(name + offset + kPadToken);
      continue;
    }
    std::string word = normalize(sentence.tokens[static_cast<std::size_t>(pos)], false);
    AffixSet a = affixes(word);
    out.push_back("w" + offset + word);
    out.push_back("p2" + offset + a.p2);
    out.push_back("p3" + offset + a.p3);
    out.push_back("s2" + offset + a.s2);
    out.push_back("s3" + offset + a.s3);
  }
  return out;
}

int FeatureIndex::lookup(const std::string& feature) const {
  auto it = index_.find(feature);
  return it == index_.end() ? -1 : it->second;
}

int FeatureIndex::add(const std::string& feature) {
  auto [it, inserted] = index_.try_emplace(feature, static_cast<int>(features_.size()));
  if (inserted) features_.push_back(feature);
  return it->second;
}

FeatureIndex build_feature_index(std::span<const TaggedSentence> train, int window, std::size_t cutoff) {
  if (train.empty()) throw UsageError("build_feature_index: empty training set");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : train)
    for (std::size_t t = 0; t < s.size(); ++t)
      for (auto& f : extract_features(s, t, window))
        if (counts[f]++ == 0) order.push_back(std::move(f));
  FeatureIndex index;
  for (const auto& f : order)
    if (counts[f] >= cutoff) index.add(f);
  return index;
}

int CrfModel::tag_id(const std::string& tag) const {
  auto it = std::find(tags.begin(), tags.end(), tag);
  return it == tags.end() ? -1 : static_cast<int>(it - tags.begin());
}

CrfModel make_crf_model(FeatureIndex features, std::vector<std::string> tags, int window, double l2) {
  if (window < 0) throw UsageError("CRF window must be non-negative");
  if (tags.empty()) throw UsageError("CRF needs at least one tag");
  CrfModel m;
  m.window = window;
  m.l2 = l2;
  m.tags = std::move(tags);
  m.features = std::move(features);
  const auto K = m.tags.size();
  m.params.add("state", {m.features.size(), K});
  m.params.add("trans", {K, K});
  m.params.add("start", {K});
  m.params.add("end", {K});
  return m;
}

CrfInstance make_instance(const CrfModel& model, const TaggedSentence& sentence) {
  CrfInstance inst;
  inst.features.resize(sentence.size());
  for (std::size_t t = 0; t < sentence.size(); ++t)
    for (const auto& f : extract_features(sentence, t, model.window))
      if (int id = model.features.lookup(f); id >= 0) inst.features[t].push_back(id);
  if (sentence.tagged()) {
    for (const auto& tag : sentence.tags) {
      int id = model.tag_id(tag);
      if (id < 0) throw FormatError("tag '" + tag + "' does not occur in the training tagset");
      inst.gold.push_back(id);
    }
  }
  return inst;
}

Lattice build_lattice(const CrfModel& model, const CrfInstance& instance) {
  const auto K = model.num_tags();
  Lattice L(instance.features.size(), K);
  const Tensor& w = model.params.get("state");
  for (std::size_t t = 0; t < L.n; ++t)
    for (int f : instance.features[t]) {
      const double* row = w.row(static_cast<std::size_t>(f));
      for (std::size_t j = 0; j < K; ++j) L.at(t, j) += row[j];
    }
  L.trans = model.params.get("trans").value;
  L.start = model.params.get("start").value;
  L.end = model.params.get("end").value;
  return L;
}

Lattice build_lattice(const CrfModel& model, const TaggedSentence& sentence) {
  return build_lattice(model, make_instance(model, sentence));
}

namespace {

double regulariser(const CrfModel& model, double reg_scale) {
  return reg_scale * 0.5 * model.l2 * model.params.value_sq_norm();
}

}  // namespace

double nll(const CrfModel& model, std::span<const CrfInstance> batch, double reg_scale) {
  double loss = 0.0;
  for (const auto& inst : batch) {
    if (inst.gold.size() != inst.features.size()) throw UsageError("nll: instance without gold tags");
    Lattice L = build_lattice(model, inst);
    loss += log_partition(L) - path_score(L, inst.gold);
  }
  return loss + regulariser(model, reg_scale);
}

double nll_grad(CrfModel& model, std::span<const CrfInstance> batch, double reg_scale) {
  const auto K = model.num_tags();
  Tensor& w = model.params.get("state");
  Tensor& trans = model.params.get("trans");
  Tensor& start = model.params.get("start");
  Tensor& end = model.params.get("end");
  double loss = 0.0;
  for (const auto& inst : batch) {
    if (inst.gold.size() != inst.features.size()) throw UsageError("nll_grad: instance without gold tags");
    const auto n = inst.features.size();
    Lattice L = build_lattice(model, inst);
    Marginals m = marginals(L);
    loss += m.log_z - path_score(L, inst.gold);
    auto gold = [&](std::size_t t) { return static_cast<std::size_t>(inst.gold[t]); };
    for (std::size_t t = 0; t < n; ++t) {
      for (int f : inst.features[t]) {
        double* g = w.grad.data() + static_cast<std::size_t>(f) * K;
        for (std::size_t j = 0; j < K; ++j) g[j] += m.node[t * K + j];
        g[gold(t)] -= 1.0;
      }
      if (t + 1 < n) {
        for (std::size_t k = 0; k < K * K; ++k) trans.grad[k] += m.edge[t * K * K + k];
        trans.grad[gold(t) * K + gold(t + 1)] -= 1.0;
      }
    }
    for (std::size_t j = 0; j < K; ++j) {
      start.grad[j] += m.node[j];
      end.grad[j] += m.node[(n - 1) * K + j];
    }
    start.grad[gold(0)] -= 1.0;
    end.grad[gold(n - 1)] -= 1.0;
  }
  if (model.l2 != 0.0 && reg_scale != 0.0) {
    const double c = reg_scale * model.l2;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      Tensor& p = model.params.at(i);
      for (std::size_t k = 0; k < p.size(); ++k) p.grad[k] += c * p.value[k];
    }
  }
  return loss + regulariser(model, reg_scale);
}

double nll_grad(CrfModel& model, std::span<const TaggedSentence> batch, double reg_scale) {
  std::vector<CrfInstance> instances;
  for (const auto& s : batch) instances.push_back(make_instance(model, s));
  return nll_grad(model, instances, reg_scale);
}

std::vector<std::string> predict_crf(const CrfModel& model, const TaggedSentence& sentence) {
  if (sentence.size() == 0) return {};
  ViterbiResult best = viterbi(build_lattice(model, sentence));
  std::vector<std::string> out;
  out.reserve(best.path.size());
  for (int y : best.path) out.push_back(model.tags[static_cast<std::size_t>(y)]);
  return out;
}

CrfTrainResult train_crf(const CrfConfig& config, std::span<const TaggedSentence> train,
                         std::span<const TaggedSentence> dev) {
  if (train.empty()) throw UsageError("train_crf: empty training set");
  if (dev.empty()) throw UsageError("train_crf: empty dev set");
  std::vector<std::string> tags;
  for (const auto& s : train) {
    if (!s.tagged()) throw UsageError("train_crf: training sentence without tags");
    for (const auto& t : s.tags)
      if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
  }
  CrfModel model = make_crf_model(build_feature_index(train, config.window, config.feature_cutoff), tags, config.window,
                                  config.l2);
  if (config.init_range > 0) {
    std::mt19937_64 init_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    for (std::size_t i = 0; i < model.params.size(); ++i) fill_uniform(model.params.at(i), config.init_range, init_rng);
  }

  std::vector<CrfInstance> instances;
  instances.reserve(train.size());
  for (const auto& s : train) instances.push_back(make_instance(model, s));
  const double n_train = static_cast<double>(train.size());

  TrainConfig tc;
  tc.batch_size = config.batch_size;
  tc.clip_norm = config.clip_norm;
  tc.initial_lr = config.lr;
  tc.seed = config.seed;
  tc.max_epochs = config.max_epochs;

  std::vector<CrfInstance> batch_buf;
  auto batch_loss = [&](std::span<const std::size_t> ids, std::mt19937_64&) {
    batch_buf.clear();
    for (auto id : ids) batch_buf.push_back(instances[id]);
    const double b = static_cast<double>(ids.size());
    const double loss = nll_grad(model, batch_buf, b / n_train);
    for (std::size_t i = 0; i < model.params.size(); ++i)
      for (double& g : model.params.at(i).grad) g /= b;
    return loss / b;
  };
  const TagSequences dev_gold = gold_tags(dev);
  auto dev_score = [&] {
    TagSequences pred;
    pred.reserve(dev.size());
    for (const auto& s : dev) pred.push_back(predict_crf(model, s));
    return tag_report(confusion(dev_gold, pred, model.tags)).weighted_f1;
  };
  TrainResult tr = train_loop(model.params, tc, train.size(), batch_loss, dev_score);
  return {std::move(model), std::move(tr)};
}

}  // namespace taglab

#include "taglab/app.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "taglab/baselines.h"
#include "taglab/error.h"

namespace taglab::app {

using json = nlohmann::ordered_json;

RunConfig::RunConfig() { apply_feature_list(neural, "words,chars,prefix,suffix"); }

namespace {

double parse_double(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid value '" + value + "' for " + name);
}

long long parse_int(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid value '" + value + "' for " + name);
}

bool is_neural(const RunConfig& c) { return c.model_kind == "neural"; }

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string signed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f", std::abs(v) < 0.005 ? 0.0 : v);
  return buf;
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& name, const std::string& value) {
  if (name == "lr") {
    const double v = parse_double(name, value);
    c.train.initial_lr = v;
    c.crf.lr = v;
  } else if (name == "dropout") {
    c.neural.dropout = parse_double(name, value);
  } else if (name == "window") {
    const auto v = static_cast<int>(parse_int(name, value));
    c.neural.window = v;
    c.crf.window = v;
  } else if (name == "l2") {
    c.crf.l2 = parse_double(name, value);
  } else if (name == "encoder") {
    c.neural.encoder = parse_encoder(value);
  } else if (name == "predictor") {
    c.neural.predictor = parse_predictor(value);
  } else if (name == "features") {
    apply_feature_list(c.neural, value);
  } else if (name == "batch-size") {
    const auto v = parse_int(name, value);
    if (v < 1) throw UsageError("batch-size must be at least 1");
    c.train.batch_size = c.crf.batch_size = static_cast<std::size_t>(v);
  } else if (name == "clip") {
    c.train.clip_norm = c.crf.clip_norm = parse_double(name, value);
  } else if (name == "hidden") {
    c.neural.hidden = static_cast<std::size_t>(parse_int(name, value));
  } else if (name == "word-dim") {
    c.neural.word_dim = static_cast<std::size_t>(parse_int(name, value));
  } else if (name == "max-epochs") {
    c.train.max_epochs = c.crf.max_epochs = static_cast<int>(parse_int(name, value));
  } else if (name == "filter-widths") {
    std::string items = value;
    std::replace(items.begin(), items.end(), '+', ',');
    std::stringstream ss(items);
    std::string w;
    c.neural.filter_widths.clear();
    while (std::getline(ss, w, ',')) c.neural.filter_widths.push_back(static_cast<int>(parse_int(name, w)));
  } else if (name == "seed") {
    c.seed = c.train.seed = c.crf.seed = static_cast<std::uint64_t>(parse_int(name, value));
  } else {
    throw UsageError("unknown setting '" + name + "'");
  }
}

json resolved_config(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["model_kind"] = c.model_kind;
  j["seed"] = c.seed;
  if (!c.corpus.empty()) j["corpus"] = c.corpus;
  if (!c.split.empty()) j["split"] = c.split;
  j["folds"] = c.folds;
  if (c.fold >= 0) j["fold"] = c.fold;
  if (c.model_kind == "crf") j["crf"] = to_json(c.crf);
  if (is_neural(c)) {
    j["neural"] = to_json(c.neural);
    j["train"] = to_json(c.train);
    j["vocab"] = {{"word_min", c.vocab.word_min}, {"affix_min", c.vocab.affix_min}};
  }
  if (!c.grid.empty()) j["grid"] = c.grid;
  if (!c.sample_std) j["std"] = "population";
  return j;
}

std::string method_label(const RunConfig& c) {
  if (c.model_kind == "major") return "Major";
  if (c.model_kind == "memo") return "Memo";
  if (c.model_kind == "crf") return "CRF";
  std::string s = c.neural.encoder == Encoder::kBiLstm ? "biLSTM" : "Feedforward";
  s += c.neural.predictor == Predictor::kCrf ? " + CRF" : " + softmax";
  return s;
}

TrainedModel train_model(const RunConfig& c, std::span<const TaggedSentence> train, std::span<const TaggedSentence> dev) {
  if (c.model_kind == "major") return {fit_major(train), {}};
  if (c.model_kind == "memo") return {fit_memo(train), {}};
  if (c.model_kind == "crf") {
    auto r = train_crf(c.crf, train, dev);
    return {std::move(r.model), std::move(r.training)};
  }
  if (is_neural(c)) {
    auto r = train_neural(c.neural, c.train, c.vocab, train, dev);
    return {std::move(r.model), std::move(r.training)};
  }
  throw UsageError("unknown model kind '" + c.model_kind + "' (expected major, memo, crf or neural)");
}

TagReport evaluate(const AnyModel& model, std::span<const TaggedSentence> sentences, ConfusionMatrix* matrix) {
  TagSequences gold = gold_tags(sentences), pred;
  for (const auto& s : sentences) pred.push_back(predict(model, s));
  ConfusionMatrix cm = confusion(gold, pred);
  if (cm.total() == 0) throw UsageError("nothing to evaluate: no tagged tokens");
  TagReport r = tag_report(cm);
  if (matrix) *matrix = std::move(cm);
  return r;
}

std::vector<FoldSplit> load_or_make_split(const RunConfig& c, std::size_t n) {
  if (!c.split.empty()) return parse_split_file(read_text_file(c.split), n);
  if (c.folds < 2) throw UsageError("at least two folds are needed");
  return make_folds(n, c.folds, c.seed);
}

std::vector<FoldResult> run_crossval(const RunConfig& c, std::span<const TaggedSentence> corpus,
                                     std::span<const FoldSplit> folds, unsigned threads) {
  std::vector<FoldResult> results(folds.size());
  parallel_for(folds.size(), threads, [&](std::size_t i) {
    const auto& f = folds[i];
    Corpus train = select(corpus, f.train_ids), dev = select(corpus, f.dev_ids), test = select(corpus, f.test_ids);
    TrainedModel m = train_model(c, train, dev);
    TagReport t = evaluate(m.model, test);
    results[i] = {f.fold, evaluate(m.model, dev).weighted_f1, t.weighted_f1, t.accuracy};
  });
  return results;
}

std::string crossval_report(const RunConfig& c, std::span<const FoldResult> results) {
  std::ostringstream s;
  s << "# config " << resolved_config(c).dump() << "\n";
  s << "fold\tdev_f1\ttest_f1\ttest_accuracy\n";
  std::vector<double> dev, test, acc;
  const auto spread = [&](const std::vector<double>& v) { return format_mean_std(aggregate_folds(v, c.sample_std)); };
  for (const auto& r : results) {
    s << r.fold << "\t" << fixed2(100 * r.dev_f1) << "\t" << fixed2(100 * r.test_f1) << "\t" << fixed2(100 * r.test_accuracy)
      << "\n";
    dev.push_back(r.dev_f1);
    test.push_back(r.test_f1);
    acc.push_back(r.test_accuracy);
  }
  if (results.size() >= 2) {
    s << "mean (std)\t" << spread(dev) << "\t" << spread(test) << "\t" << spread(acc) << "\n";
    s << "\nMethod\tF1\n" << method_label(c) << "\t" << spread(test) << "\n";
  }
  return s.str();
}

std::vector<AblationRow> run_ablation(const RunConfig& c, std::span<const TaggedSentence> corpus,
                                      std::span<const FoldSplit> folds, unsigned threads) {
  if (!is_neural(c)) throw UsageError("ablate needs --model-kind neural");
  static const char* kSteps[][2] = {{"", "words"},
                                    {" + chars", "words,chars"},
                                    {" + chars + prefix", "words,chars,prefix"},
                                    {" + chars + prefix + suffix", "words,chars,prefix,suffix"}};
  const std::size_t n_rows = 4, n_folds = folds.size();
  std::vector<double> scores(n_rows * n_folds);
  parallel_for(n_rows * n_folds, threads, [&](std::size_t cell) {
    RunConfig rc = c;
    apply_feature_list(rc.neural, kSteps[cell / n_folds][1]);
    const auto& f = folds[cell % n_folds];
    Corpus train = select(corpus, f.train_ids), dev = select(corpus, f.dev_ids);
    scores[cell] = evaluate(train_model(rc, train, dev).model, dev).weighted_f1;
  });
  std::vector<AblationRow> rows;
  for (std::size_t r = 0; r < n_rows; ++r) {
    double mean = 0;
    for (std::size_t f = 0; f < n_folds; ++f) mean += scores[r * n_folds + f];
    mean /= static_cast<double>(n_folds);
    AblationRow row{method_label(c) + kSteps[r][0], kSteps[r][1], mean, 0.0};
    // Deltas are taken between the rounded percentages, as they are displayed.
    if (r > 0) row.delta = std::round(mean * 1e4) / 100 - std::round(rows.back().dev_f1 * 1e4) / 100;
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_report(const RunConfig& c, std::span<const AblationRow> rows) {
  std::ostringstream s;
  s << "# config " << resolved_config(c).dump() << "\n";
  s << "Neural tagger\tF1\n";
  for (const auto& r : rows) s << r.label << "\t" << fixed2(100 * r.dev_f1) << " (" << signed2(r.delta) << ")\n";
  return s.str();
}

std::string default_grid(const RunConfig& c) {
  if (c.model_kind == "crf") return "window=0,1,2 l2=0.0001,0.001,0.01,0.1,1";
  if (is_neural(c)) {
    std::string g = "lr=0.001,0.0005,0.0001 dropout=0.2,0.5";
    if (c.neural.encoder == Encoder::kFeedforward) g += " window=1,2,3";
    if (c.neural.use_chars) g += " filter-widths=2,3,4,5";
    return g;
  }
  throw UsageError("the " + c.model_kind + " baseline has nothing to tune");
}

std::vector<GridAxis> parse_grid(const std::string& text) {
  std::vector<GridAxis> axes;
  std::string spaced = text;
  std::replace(spaced.begin(), spaced.end(), ';', ' ');
  std::stringstream ss(spaced);
  std::string item;
  while (ss >> item) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("grid axis '" + item + "' is not name=v1,v2,...");
    GridAxis axis{item.substr(0, eq), {}};
    std::stringstream vs(item.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ','))
      if (!v.empty()) axis.values.push_back(v);
    axes.push_back(std::move(axis));
  }
  return axes;
}

namespace {

void write_or_print(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) out << content;
  else write_text_file(path, content);
}

Corpus load_corpus(const RunConfig& c) {
  if (c.corpus.empty()) throw UsageError("--corpus is required");
  return read_corpus_file(c.corpus);
}

const FoldSplit& pick_fold(const std::vector<FoldSplit>& folds, int fold) {
  const int f = fold < 0 ? 0 : fold;
  if (f >= static_cast<int>(folds.size())) throw UsageError("fold " + std::to_string(f) + " is out of range");
  return folds[static_cast<std::size_t>(f)];
}

int cmd_split(const RunConfig& c, std::ostream& out) {
  Corpus corpus = load_corpus(c);
  if (c.folds < 2) throw UsageError("at least two folds are needed");
  write_or_print(c.out, format_split_file(make_folds(corpus.size(), c.folds, c.seed)), out);
  return 0;
}

int cmd_train(RunConfig c, std::ostream& out) {
  if (c.out.empty()) throw UsageError("train needs --out for the model file");
  Corpus corpus = load_corpus(c);
  auto folds = load_or_make_split(c, corpus.size());
  const FoldSplit& f = pick_fold(folds, c.fold);
  c.fold = f.fold;
  Corpus train = select(corpus, f.train_ids), dev = select(corpus, f.dev_ids);
  TrainedModel m = train_model(c, train, dev);
  save_model(c.out, m.model);
  if (!c.history.empty()) write_text_file(c.history, history_jsonl(m.training.history));
  json report;
  report["config"] = resolved_config(c);
  report["train_sentences"] = train.size();
  report["dev_sentences"] = dev.size();
  if (!m.training.history.empty()) {
    report["epochs"] = m.training.history.size();
    report["best_epoch"] = m.training.best_epoch;
  }
  report["dev_f1"] = evaluate(m.model, dev).weighted_f1;
  out << report.dump(2) << "\n";
  return 0;
}

int cmd_tag(const RunConfig& c, std::ostream& out) {
  if (c.model.empty()) throw UsageError("tag needs --model");
  if (c.input.empty()) throw UsageError("tag needs --input");
  AnyModel model = load_model(c.model);
  Corpus sentences = parse_vertical_corpus(read_text_file(c.input), false);
  for (auto& s : sentences) s.tags = predict(model, TaggedSentence{s.tokens, {}});
  write_or_print(c.out, format_vertical_corpus(sentences), out);
  return 0;
}

int cmd_eval(RunConfig c, std::ostream& out) {
  if (c.model.empty()) throw UsageError("eval needs --model");
  AnyModel model = load_model(c.model);
  c.model_kind = model_kind(model);
  Corpus corpus = load_corpus(c);
  Corpus sentences = corpus;
  if (!c.split.empty() || c.fold >= 0) {
    auto folds = load_or_make_split(c, corpus.size());
    const FoldSplit& f = pick_fold(folds, c.fold);
    c.fold = f.fold;
    sentences = select(corpus, f.test_ids);
  }
  ConfusionMatrix cm;
  TagReport r = evaluate(model, sentences, &cm);
  json header = resolved_config(c);
  header.erase("crf");
  header.erase("neural");
  header.erase("train");
  header.erase("vocab");
  const ModelContainer container = to_container(model);
  if (container.meta.contains("config")) header["model_config"] = container.meta["config"];
  std::ostringstream s;
  s << "# config " << header.dump() << "\n" << report_text(r);
  write_or_print(c.out, s.str(), out);
  if (!c.confusion.empty()) write_text_file(c.confusion, confusion_csv(cm));
  return 0;
}

int cmd_crossval(const RunConfig& c, std::ostream& out) {
  Corpus corpus = load_corpus(c);
  auto folds = load_or_make_split(c, corpus.size());
  write_or_print(c.out, crossval_report(c, run_crossval(c, corpus, folds, thread_cap())), out);
  return 0;
}

int cmd_ablate(const RunConfig& c, std::ostream& out) {
  Corpus corpus = load_corpus(c);
  auto folds = load_or_make_split(c, corpus.size());
  if (c.fold >= 0) folds = {pick_fold(folds, c.fold)};
  write_or_print(c.out, ablation_report(c, run_ablation(c, corpus, folds, thread_cap())), out);
  return 0;
}

int cmd_tune(RunConfig c, std::ostream& out) {
  if (c.grid.empty()) c.grid = default_grid(c);
  Corpus corpus = load_corpus(c);
  auto folds = load_or_make_split(c, corpus.size());
  const FoldSplit& f = pick_fold(folds, c.fold);
  c.fold = f.fold;
  Corpus train = select(corpus, f.train_ids), dev = select(corpus, f.dev_ids);
  auto axes = parse_grid(c.grid);
  // Reject bad settings before any training starts.
  for (const auto& point : enumerate_grid(axes)) {
    RunConfig probe = c;
    for (const auto& [k, v] : point) apply_setting(probe, k, v);
  }
  auto board = grid_search(
      axes,
      [&](const GridPoint& point) {
        RunConfig rc = c;
        for (const auto& [k, v] : point) apply_setting(rc, k, v);
        return evaluate(train_model(rc, train, dev).model, dev).weighted_f1;
      },
      thread_cap());
  std::ostringstream s;
  s << "# config " << resolved_config(c).dump() << "\n";
  s << "rank\tdev_f1\tsettings\n";
  for (std::size_t i = 0; i < board.size(); ++i) {
    s << i + 1 << "\t" << fixed2(100 * board[i].dev_f1) << "\t";
    for (std::size_t k = 0; k < board[i].point.size(); ++k)
      s << (k ? ";" : "") << board[i].point[k].first << "=" << board[i].point[k].second;
    s << "\n";
  }
  write_or_print(c.out, s.str(), out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Part-of-speech tagging toolkit", "taglab"};
  app.set_config("--config", "", "TOML/INI file of option defaults; flags given on the command line win");
  app.require_subcommand(1);

  RunConfig c;
  std::optional<std::string> lr, dropout, window, l2, encoder, predictor, features, batch_size, clip, hidden, word_dim,
      max_epochs, seed;
  std::string lowercase_mode = "lookup";
  std::string filter_widths;
  int word_min = 2, affix_min = 5;

  app.add_option("--corpus", c.corpus, "Tagged corpus, token<TAB>tag lines");
  app.add_option("--split", c.split, "Split file; derived from --seed when absent");
  app.add_option("--fold", c.fold, "Fold index");
  app.add_option("--folds", c.folds, "Number of folds for split");
  app.add_option("--model-kind", c.model_kind, "major, memo, crf or neural")->check(CLI::IsMember({"major", "memo", "crf", "neural"}));
  app.add_option("--model", c.model, "Model file to read");
  app.add_option("--input", c.input, "Sentences to tag, one token per line");
  app.add_option("--out", c.out, "Output path (stdout when absent)");
  app.add_option("--confusion", c.confusion, "Confusion matrix CSV output for eval");
  app.add_option("--history", c.history, "Per-epoch JSON lines output for train");
  app.add_option("--grid", c.grid, "Search space for tune; a per-model default when absent");
  app.add_option("--encoder", encoder, "ff or bilstm");
  app.add_option("--predictor", predictor, "softmax or crf");
  app.add_option("--features", features, "Comma list drawn from words, prefix, suffix, chars");
  app.add_option("--window", window, "Context window");
  app.add_option("--l2", l2, "CRF L2 strength");
  app.add_option("--lr", lr, "Initial learning rate");
  app.add_option("--dropout", dropout, "Dropout rate");
  app.add_option("--batch-size", batch_size, "Sentences per batch (default 8)");
  app.add_option("--clip", clip, "Gradient norm cap (default 1.0)");
  app.add_option("--hidden", hidden, "Hidden units");
  app.add_option("--word-dim", word_dim, "Word embedding size");
  app.add_option("--max-epochs", max_epochs, "Epoch cap");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--word-min", word_min, "Minimum count for a word to get its own embedding");
  app.add_option("--affix-min", affix_min, "Minimum count for an affix to get its own embedding");
  app.add_option("--filter-widths", filter_widths, "Character CNN widths, comma separated");
  bool population_std = false;
  app.add_flag("--population-std", population_std, "Report the population (n) rather than sample (n-1) fold spread");
  app.add_option("--lowercase-mode", lowercase_mode, "lookup or preserve")->check(CLI::IsMember({"lookup", "preserve"}));

  for (const char* name : {"split", "train", "tag", "eval", "crossval", "tune", "ablate"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("split")->description("Write a k-fold split file");
  app.get_subcommand("train")->description("Train a model on one fold");
  app.get_subcommand("tag")->description("Tag sentences with a saved model");
  app.get_subcommand("eval")->description("Score a saved model and write its report");
  app.get_subcommand("crossval")->description("Train and test on every fold");
  app.get_subcommand("tune")->description("Grid search on one fold's dev set");
  app.get_subcommand("ablate")->description("Cumulative feature ablation of the neural tagger");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::FileError& e) {
    err << "taglab: " << e.what() << "\n";
    return IoError("").exit_code();
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : UsageError("").exit_code();
  }

  try {
    c.command = app.get_subcommands().front()->get_name();
    const bool neural_only = encoder || predictor || features || dropout || hidden || word_dim || !filter_widths.empty() ||
                             app.count("--lowercase-mode") || app.count("--word-min") || app.count("--affix-min");
    if (neural_only && c.model_kind != "neural")
      throw UsageError("neural options given with --model-kind " + c.model_kind);
    if (l2 && c.model_kind != "crf") throw UsageError("--l2 applies to --model-kind crf only");

    c.sample_std = !population_std;
    c.vocab.word_min = static_cast<std::size_t>(std::max(1, word_min));
    c.vocab.affix_min = static_cast<std::size_t>(std::max(1, affix_min));
    c.neural.lowercase_mode = lowercase_mode == "preserve" ? LowercaseMode::kPreserve : LowercaseMode::kLookup;
    if (!filter_widths.empty()) apply_setting(c, "filter-widths", filter_widths);
    apply_setting(c, "seed", seed.value_or("0"));
    const std::pair<const char*, std::optional<std::string>*> settings[] = {
        {"lr", &lr},           {"dropout", &dropout},       {"window", &window},         {"l2", &l2},
        {"encoder", &encoder}, {"predictor", &predictor},   {"features", &features},     {"batch-size", &batch_size},
        {"clip", &clip},       {"hidden", &hidden},         {"word-dim", &word_dim},     {"max-epochs", &max_epochs}};
    for (const auto& [name, value] : settings)
      if (*value) apply_setting(c, name, **value);
    if (is_neural(c)) c.neural.validate();

    if (c.command == "split") return cmd_split(c, out);
    if (c.command == "train") return cmd_train(c, out);
    if (c.command == "tag") return cmd_tag(c, out);
    if (c.command == "eval") return cmd_eval(c, out);
    if (c.command == "crossval") return cmd_crossval(c, out);
    if (c.command == "tune") return cmd_tune(c, out);
    if (c.command == "ablate") return cmd_ablate(c, out);
    throw UsageError("unknown command");
  } catch (const Error& e) {
    err << "taglab: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "taglab: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace taglab::app

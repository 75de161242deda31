#include "taglab/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "taglab/error.h"
#include "taglab/text.h"

namespace taglab {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; });
}

}  // namespace

Corpus parse_vertical_corpus(std::string_view text, bool require_tags) {
  Corpus out;
  TaggedSentence current;
  bool all_tagged = true;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    if (!all_tagged) current.tags.clear();
    out.push_back(std::move(current));
    current = {};
    all_tagged = true;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) {
      flush();
      continue;
    }
    auto fields = split_tabs(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 2 && !(fields.size() == 1 && !require_tags))
      throw FormatError(where + ": expected token<TAB>tag, found " + std::to_string(fields.size()) + " field(s)");
    if (fields[0].empty() || has_space(fields[0])) throw FormatError(where + ": empty token or token with whitespace");
    try {
      decode_utf8(fields[0]);
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    current.tokens.emplace_back(fields[0]);
    if (fields.size() == 2) {
      if (fields[1].empty() || has_space(fields[1])) throw FormatError(where + ": empty tag or tag with whitespace");
      current.tags.emplace_back(fields[1]);
    } else {
      all_tagged = false;
    }
  }
  flush();
  return out;
}

std::string format_vertical_corpus(std::span<const TaggedSentence> sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += s.tokens[i];
      if (s.tagged()) {
        out += '\t';
        out += s.tags[i];
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("error writing " + path.string());
}

Corpus read_corpus_file(const std::filesystem::path& path, bool require_tags) {
  return parse_vertical_corpus(read_text_file(path), require_tags);
}

const char* affix_name(AffixKind kind) {
  switch (kind) {
    case AffixKind::kPrefix2: return "p2";
    case AffixKind::kPrefix3: return "p3";
    case AffixKind::kSuffix2: return "s2";
    case AffixKind::kSuffix3: return "s3";
  }
  return "?";
}

const std::string& AffixSet::get(AffixKind kind) const {
  switch (kind) {
    case AffixKind::kPrefix2: return p2;
    case AffixKind::kPrefix3: return p3;
    case AffixKind::kSuffix2: return s2;
    case AffixKind::kSuffix3: return s3;
  }
  return p2;
}

AffixSet affixes(std::string_view word) {
  if (word.empty()) throw UsageError("affixes: empty word");
  std::u32string cps = decode_utf8(word);
  if (cps.size() < 3) {
    std::string w(word);
    return {w, w, w, w};
  }
  const auto n = cps.size();
  return {encode_utf8(cps.substr(0, 2)), encode_utf8(cps.substr(0, 3)), encode_utf8(cps.substr(n - 2)),
          encode_utf8(cps.substr(n - 3))};
}

std::string normalize(std::string_view word, bool keep_case) {
  return keep_case ? std::string(word) : to_lower(word);
}

SymbolTable::SymbolTable(bool reserved) : reserved_(reserved) {
  if (reserved_) {
    add(kUnkSymbol);
    add(kPadSymbol);
  }
}

int SymbolTable::add(const std::string& symbol) {
  auto [it, inserted] = index_.try_emplace(symbol, static_cast<int>(symbols_.size()));
  if (inserted) symbols_.push_back(symbol);
  return it->second;
}

int SymbolTable::lookup(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it != index_.end()) return it->second;
  return reserved_ ? kUnk : -1;
}

bool SymbolTable::contains(std::string_view symbol) const { return index_.count(std::string(symbol)) > 0; }

SymbolTable SymbolTable::from_symbols(std::vector<std::string> symbols, bool reserved) {
  SymbolTable table;
  table.reserved_ = reserved;
  if (reserved && (symbols.size() < 2 || symbols[0] != kUnkSymbol || symbols[1] != kPadSymbol))
    throw FormatError("symbol table is missing its reserved entries");
  for (auto& s : symbols) {
    if (table.index_.count(s)) throw FormatError("duplicate symbol '" + s + "'");
    table.add(s);
  }
  return table;
}

Vocabulary build_vocabulary(std::span<const TaggedSentence> train, const VocabOptions& options) {
  if (train.empty()) throw UsageError("build_vocabulary: empty training set");
  Vocabulary vocab;
  vocab.lowercase_words = options.lowercase_words;

  // Tokens are visited in corpus order so that ids follow first occurrence.
  std::vector<std::string> word_order;
  std::array<std::vector<std::string>, kNumAffixKinds> affix_order;
  std::array<std::map<std::string, std::size_t>, kNumAffixKinds> affix_counts;
  for (const auto& s : train) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::string key = vocab.word_key(s.tokens[i]);
      if (vocab.word_counts[key]++ == 0) word_order.push_back(key);
      AffixSet a = affixes(key);
      for (int k = 0; k < kNumAffixKinds; ++k) {
        const auto& affix = a.get(static_cast<AffixKind>(k));
        if (affix_counts[k][affix]++ == 0) affix_order[k].push_back(affix);
      }
      for (const auto& c : utf8_chars(s.tokens[i])) vocab.chars.add(c);
      if (s.tagged()) vocab.tags.add(s.tags[i]);
    }
  }
  for (const auto& w : word_order)
    if (vocab.word_counts[w] >= options.word_min) vocab.words.add(w);
  for (int k = 0; k < kNumAffixKinds; ++k)
    for (const auto& a : affix_order[k])
      if (affix_counts[k][a] >= options.affix_min) vocab.affixes[k].add(a);
  return vocab;
}

EncodedSentence encode_sentence(const Vocabulary& vocab, const TaggedSentence& sentence) {
  EncodedSentence enc;
  const auto n = sentence.size();
  enc.words.reserve(n);
  for (auto& a : enc.affixes) a.reserve(n);
  enc.chars.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string key = vocab.word_key(sentence.tokens[i]);
    enc.words.push_back(vocab.words.lookup(key));
    AffixSet a = affixes(key);
    for (int k = 0; k < kNumAffixKinds; ++k) enc.affixes[k].push_back(vocab.affixes[k].lookup(a.get(static_cast<AffixKind>(k))));
    std::vector<int> chars;
    for (const auto& c : utf8_chars(sentence.tokens[i])) chars.push_back(vocab.chars.lookup(c));
    enc.chars.push_back(std::move(chars));
  }
  if (sentence.tagged()) {
    for (const auto& t : sentence.tags) {
      int id = vocab.tags.lookup(t);
      if (id < 0) throw FormatError("tag '" + t + "' does not occur in the training tagset");
      enc.tags.push_back(id);
    }
  }
  return enc;
}

std::vector<FoldSplit> make_folds(std::size_t n_sentences, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("make_folds: k must be at least 2");
  if (n_sentences < static_cast<std::size_t>(k)) throw UsageError("make_folds: fewer sentences than folds");
  std::vector<std::size_t> ids(n_sentences);
  for (std::size_t i = 0; i < n_sentences; ++i) ids[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const auto uk = static_cast<std::size_t>(k);
  std::vector<std::vector<std::size_t>> slices(uk);
  std::size_t offset = 0;
  for (std::size_t f = 0; f < uk; ++f) {
    std::size_t len = n_sentences / uk + (f < n_sentences % uk ? 1 : 0);
    slices[f].assign(ids.begin() + static_cast<std::ptrdiff_t>(offset), ids.begin() + static_cast<std::ptrdiff_t>(offset + len));
    std::sort(slices[f].begin(), slices[f].end());
    offset += len;
  }

  std::vector<FoldSplit> folds;
  for (std::size_t f = 0; f < uk; ++f) {
    FoldSplit split;
    split.fold = static_cast<int>(f);
    split.test_ids = slices[f];
    split.dev_ids = slices[(f + 1) % uk];
    for (std::size_t g = 0; g < uk; ++g)
      if (g != f && g != (f + 1) % uk) split.train_ids.insert(split.train_ids.end(), slices[g].begin(), slices[g].end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

std::string format_split_file(std::span<const FoldSplit> folds) {
  std::string out;
  for (const auto& f : folds) {
    auto emit = [&](const char* part, const std::vector<std::size_t>& ids) {
      for (auto id : ids) out += std::to_string(f.fold) + '\t' + part + '\t' + std::to_string(id) + '\n';
    };
    emit("train", f.train_ids);
    emit("dev", f.dev_ids);
    emit("test", f.test_ids);
  }
  return out;
}

std::vector<FoldSplit> parse_split_file(std::string_view text, std::size_t n_sentences) {
  std::map<int, FoldSplit> by_fold;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto parse_num = [](std::string_view s, auto& value) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) continue;
    const std::string where = "split file line " + std::to_string(line_no);
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw FormatError(where + ": expected 3 tab-separated fields");
    int fold = 0;
    std::size_t id = 0;
    if (!parse_num(fields[0], fold) || fold < 0) throw FormatError(where + ": bad fold id");
    if (!parse_num(fields[2], id)) throw FormatError(where + ": bad sentence index");
    if (id >= n_sentences) throw FormatError(where + ": sentence index out of range");
    auto& split = by_fold[fold];
    split.fold = fold;
    if (fields[1] == "train") split.train_ids.push_back(id);
    else if (fields[1] == "dev") split.dev_ids.push_back(id);
    else if (fields[1] == "test") split.test_ids.push_back(id);
    else throw FormatError(where + ": part must be train, dev or test");
  }
  std::vector<FoldSplit> folds;
  int expected = 0;
  for (auto& [fold, split] : by_fold) {
    if (fold != expected++) throw FormatError("split file: fold ids are not contiguous from 0");
    std::vector<std::size_t> all;
    for (auto* part : {&split.train_ids, &split.dev_ids, &split.test_ids}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
      throw FormatError("split file: fold " + std::to_string(fold) + " assigns a sentence twice");
    folds.push_back(std::move(split));
  }
  return folds;
}

Corpus select(std::span<const TaggedSentence> corpus, std::span<const std::size_t> ids) {
  Corpus out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(corpus[id]);
  return out;
}

}  // namespace taglab

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taglab {

// One pre-tokenized sentence. Multi-word expressions arrive underscore-joined
// and are treated as a single token. `tags` is empty for unlabeled input.
struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;

  std::size_t size() const { return tokens.size(); }
  bool tagged() const { return !tags.empty(); }
  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

using Corpus = std::vector<TaggedSentence>;

// Parses `token<TAB>tag` lines with blank-line sentence separators. When
// `require_tags` is false, single-column lines are also accepted and produce
// untagged sentences (tags of two-column lines are kept).
Corpus parse_vertical_corpus(std::string_view text, bool require_tags = true);
std::string format_vertical_corpus(std::span<const TaggedSentence> sentences);

Corpus read_corpus_file(const std::filesystem::path& path, bool require_tags = true);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

enum class AffixKind : int { kPrefix2 = 0, kPrefix3 = 1, kSuffix2 = 2, kSuffix3 = 3 };
inline constexpr int kNumAffixKinds = 4;
const char* affix_name(AffixKind kind);

// Leading and trailing 2/3-character slices, on code points. Words shorter
// than three characters use the word itself for all four.
struct AffixSet {
  std::string p2, p3, s2, s3;
  const std::string& get(AffixKind kind) const;
};

AffixSet affixes(std::string_view word);

std::string normalize(std::string_view word, bool keep_case);

// How case is handled once character features are on. kLookup lowercases
// word and affix lookups while characters keep their case; kPreserve keeps
// case everywhere. Without character features both lowercase everything.
enum class LowercaseMode { kLookup, kPreserve };

// String <-> dense id table. Tables with reserved entries put UNK at 0 and
// PAD at 1.
class SymbolTable {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kPad = 1;
  static constexpr const char* kUnkSymbol = "<unk>";
  static constexpr const char* kPadSymbol = "<pad>";

  SymbolTable() = default;
  explicit SymbolTable(bool reserved);

  int add(const std::string& symbol);
  // Returns kUnk for unknown symbols in reserved tables, -1 otherwise.
  int lookup(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return symbols_.size(); }
  bool reserved() const { return reserved_; }
  const std::vector<std::string>& symbols() const { return symbols_; }

  static SymbolTable from_symbols(std::vector<std::string> symbols, bool reserved);

 private:
  bool reserved_ = false;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

struct VocabOptions {
  std::size_t word_min = 2;   // words seen fewer times become UNK
  std::size_t affix_min = 5;  // likewise for each affix table
  bool lowercase_words = true;
};

struct Vocabulary {
  SymbolTable words{true};
  std::array<SymbolTable, kNumAffixKinds> affixes{SymbolTable(true), SymbolTable(true), SymbolTable(true),
                                                  SymbolTable(true)};
  SymbolTable chars{true};
  SymbolTable tags{false};
  bool lowercase_words = true;
  // Training counts for every observed word (including those dropped to UNK).
  std::map<std::string, std::size_t> word_counts;

  std::string word_key(std::string_view token) const { return normalize(token, !lowercase_words); }
};

Vocabulary build_vocabulary(std::span<const TaggedSentence> train, const VocabOptions& options = {});

struct EncodedSentence {
  std::vector<int> words;
  std::array<std::vector<int>, kNumAffixKinds> affixes;
  std::vector<std::vector<int>> chars;
  std::vector<int> tags;  // empty when the sentence is untagged

  std::size_t size() const { return words.size(); }
};

// Unknown words, affixes and characters map to UNK. A gold tag outside the
// training tagset raises FormatError.
EncodedSentence encode_sentence(const Vocabulary& vocab, const TaggedSentence& sentence);

struct FoldSplit {
  int fold = 0;
  std::vector<std::size_t> train_ids, dev_ids, test_ids;
};

// Seeded shuffle then contiguous slicing into k folds (earlier folds take the
// remainder). Fold i tests on slice i and develops on slice (i+1) mod k.
std::vector<FoldSplit> make_folds(std::size_t n_sentences, int k = 5, std::uint64_t seed = 0);

// Split file: `<fold_id><TAB><train|dev|test><TAB><sentence_index>` lines.
std::string format_split_file(std::span<const FoldSplit> folds);
std::vector<FoldSplit> parse_split_file(std::string_view text, std::size_t n_sentences);

Corpus select(std::span<const TaggedSentence> corpus, std::span<const std::size_t> ids);

}  // namespace taglab

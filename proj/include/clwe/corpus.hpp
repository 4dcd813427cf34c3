#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clwe/types.hpp"

namespace clwe {

/// A line-oriented sentence source: either a plaintext file (one sentence per
/// line, space-separated tokens) or an in-memory list of lines.
class TextSource {
 public:
  using SentenceVisitor = std::function<void(std::span<const std::string_view>)>;

  static TextSource from_file(std::filesystem::path path, bool lowercase = true);
  static TextSource from_lines(std::vector<std::string> lines, bool lowercase = true);
  static TextSource none() { return from_lines({}); }

  /// Calls `visit` once per line with its tokens. Empty lines are skipped.
  void for_each_sentence(const SentenceVisitor& visit) const;

  bool lowercase() const { return lowercase_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<std::string> lines_;
  bool lowercase_ = true;
};

/// Lowercases ASCII letters in place; bytes >= 0x80 are left untouched so
/// UTF-8 sequences stay valid.
void ascii_lowercase(std::string& s);

struct VocabEntry {
  std::string word;
  std::uint64_t count_e = 0;
  std::uint64_t count_f = 0;

  std::uint64_t total() const { return count_e + count_f; }
  std::uint64_t count_in(Language lang) const { return lang == Language::e ? count_e : count_f; }
};

/// Combined word inventory over both corpora. Ids are dense positions in the
/// entry list; identical surface forms from both corpora share one id.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Takes entries in id order. Throws DataError on duplicates or zero counts.
  explicit Vocabulary(std::vector<VocabEntry> entries);

  /// Builds a vocabulary for externally supplied words whose corpus counts
  /// are unknown: every word is marked as attested once in each language.
  static Vocabulary from_words(std::span<const std::string> words);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const VocabEntry& entry(WordId id) const { return entries_[static_cast<std::size_t>(id)]; }
  const std::string& word(WordId id) const { return entry(id).word; }
  std::uint64_t count(WordId id) const { return entry(id).total(); }
  bool attested_in(WordId id, Language lang) const { return entry(id).count_in(lang) > 0; }

  std::optional<WordId> find(std::string_view word) const;

  std::uint64_t total_tokens() const { return total_; }
  std::uint64_t tokens_in(Language lang) const { return lang == Language::e ? total_e_ : total_f_; }

  std::span<const VocabEntry> entries() const { return entries_; }

  /// Text format: one "word<TAB>count_e<TAB>count_f" line per id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, WordId, Hash, std::equal_to<>> index_;
  std::uint64_t total_ = 0;
  std::uint64_t total_e_ = 0;
  std::uint64_t total_f_ = 0;
};

/// Counts both corpora into one vocabulary, dropping words whose combined
/// count is below `min_count`. Ids are assigned by descending total count,
/// ties broken by surface form. Throws DataError("empty vocabulary") when
/// nothing survives.
Vocabulary build_vocabulary(const TextSource& corpus_e, const TextSource& corpus_f,
                            std::uint64_t min_count);

/// Encoded corpus: word ids of one language, sentences stored back to back.
class SentenceStream {
 public:
  SentenceStream() = default;
  explicit SentenceStream(Language lang) : language_(lang) {}

  Language language() const { return language_; }
  std::size_t num_sentences() const { return offsets_.size() - 1; }
  std::size_t num_tokens() const { return tokens_.size(); }

  std::span<const WordId> sentence(std::size_t i) const {
    return {tokens_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const WordId> tokens() const { return tokens_; }

  void add_sentence(std::span<const WordId> ids);

 private:
  Language language_ = Language::e;
  std::vector<WordId> tokens_;
  std::vector<std::size_t> offsets_{0};
};

/// Maps tokens to ids; out-of-vocabulary tokens are dropped and sentences
/// left empty are skipped.
SentenceStream encode_corpus(const TextSource& source, const Vocabulary& vocab, Language lang);

/// Probability of keeping one occurrence of a word during subsampling:
/// min(1, sqrt(t/f) + t/f) with f = word_count / total_tokens.
double keep_probability(std::uint64_t word_count, std::uint64_t total_tokens, double t);

/// Noise distribution P(w) proportional to count(w)^exponent, sampled in
/// O(1) through a Walker alias table.
class NoiseDistribution {
 public:
  NoiseDistribution(const Vocabulary& vocab, double exponent);
  /// Distribution proportional to arbitrary positive weights.
  explicit NoiseDistribution(std::span<const double> weights, double exponent = 1.0);

  std::size_t size() const { return probability_.size(); }
  double exponent() const { return exponent_; }
  double probability(WordId id) const { return probability_[static_cast<std::size_t>(id)]; }
  std::span<const double> probabilities() const { return probability_; }

  WordId sample(Rng& rng) const {
    const auto bucket = uniform_index(rng, accept_.size());
    return uniform01(rng) < accept_[bucket] ? static_cast<WordId>(bucket) : alias_[bucket];
  }

 private:
  void build(std::span<const double> weights);

  double exponent_ = 1.0;
  std::vector<double> probability_;
  std::vector<double> accept_;
  std::vector<WordId> alias_;
};

/// Fills `out` with i.i.d. draws from `noise`, redrawing any id in `exclude`.
void sample_negatives(const NoiseDistribution& noise, Rng& rng, std::span<const WordId> exclude,
                      std::span<WordId> out);
std::vector<WordId> sample_negatives(const NoiseDistribution& noise, std::size_t count, Rng& rng,
                                     std::span<const WordId> exclude);

}  // namespace clwe

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clwe/corpus.hpp"
#include "clwe/types.hpp"

namespace clwe {

struct DictionaryStats {
  std::size_t pairs_read = 0;
  std::size_t pairs_kept = 0;  // distinct pairs after filtering
  std::size_t dropped_oov = 0;
  std::size_t dropped_multiword = 0;
  double coverage_e = 0.0;  // fraction of e-attested words with >= 1 translation
  double coverage_f = 0.0;
  double mean_translations_e = 0.0;  // over covered words only
  double mean_translations_f = 0.0;
};

/// Word-level translation lexicon between the e and f sides of a shared
/// vocabulary. A pair (s, t) puts t in dict(s) for source language e and s in
/// dict(t) for source language f.
class BilingualDictionary {
 public:
  using Pair = std::pair<std::string, std::string>;

  BilingualDictionary() = default;

  /// Reads "source<TAB>target" lines. '#' lines and blank lines are ignored.
  /// Throws DataError on a line without exactly two fields, or when no pair
  /// survives vocabulary filtering.
  static BilingualDictionary load(const std::filesystem::path& path, const Vocabulary& vocab,
                                  bool lowercase = true);
  static BilingualDictionary from_pairs(std::span<const Pair> pairs, const Vocabulary& vocab,
                                        bool lowercase = true);

  /// Translations of `id` when it is read as a word of `source`, ascending id.
  std::span<const WordId> translations(WordId id, Language source) const {
    const auto& table = source == Language::e ? e_to_f_ : f_to_e_;
    const auto i = static_cast<std::size_t>(id);
    if (i >= table.size()) return {};
    return table[i];
  }

  std::size_t vocab_size() const { return e_to_f_.size(); }
  const DictionaryStats& stats() const { return stats_; }

 private:
  void finalize(const Vocabulary& vocab);

  std::vector<std::vector<WordId>> e_to_f_;
  std::vector<std::vector<WordId>> f_to_e_;
  DictionaryStats stats_;
};

}  // namespace clwe

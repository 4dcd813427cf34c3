#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clwe/corpus.hpp"
#include "clwe/types.hpp"

namespace clwe {

// All evaluators take an embedding matrix whose rows are indexed by the ids of
// `vocab`.

struct Neighbor {
  WordId id = kNoWord;
  std::string word;
  double similarity = 0.0;
};

/// Exact cosine ranking over every word passing `filter` (attested in that
/// language), excluding the query. Ties rank the lower id first. Throws
/// DataError if the query is out of vocabulary.
std::vector<Neighbor> nearest_neighbors(const Matrix& emb, const Vocabulary& vocab,
                                        std::string_view query, std::size_t n,
                                        std::optional<Language> filter = std::nullopt);

// ---------------------------------------------------------------------------
// Bilingual lexicon induction

struct BliPair {
  std::string source;
  std::string gold;
};

struct BliTestSet {
  std::vector<BliPair> pairs;
  Language source = Language::e;
  Language target = Language::f;
};

/// "source<TAB>gold" per line.
BliTestSet load_bli_test(const std::filesystem::path& path, Language source = Language::e,
                         bool lowercase = true);

struct BliResult {
  std::map<std::size_t, double> recall;  // k -> recall@k
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
};

/// Candidates are all words attested in the target language, minus the query
/// itself unless the query is its own gold translation. Pairs whose source
/// or gold is out of vocabulary (or whose gold is not a candidate) are
/// excluded from the denominator.
BliResult bli_recall(const Matrix& emb, const Vocabulary& vocab, const BliTestSet& test,
                     std::span<const std::size_t> ks);

/// 1-based rank of `gold` among `candidates` by cosine to `query`; ties go to
/// the lower id. Exposed for the CLI and tests.
std::size_t rank_of(const Matrix& emb, WordId query, WordId gold, std::span<const WordId> candidates);

// ---------------------------------------------------------------------------
// Word similarity

struct SimilarityItem {
  std::string w1;
  std::string w2;
  double score = 0.0;
};

struct SimilarityTestSet {
  std::vector<SimilarityItem> items;
};

/// "w1<TAB>w2<TAB>score" per line.
SimilarityTestSet load_similarity_test(const std::filesystem::path& path, bool lowercase = true);

/// Ranks starting at 1; tied values share the mean of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Spearman correlation with fractional ranks. Throws DataError when either
/// side is constant or fewer than two values are given.
double spearman_correlation(std::span<const double> a, std::span<const double> b);

struct SpearmanResult {
  double rho = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
};

SpearmanResult spearman(const Matrix& emb, const Vocabulary& vocab, const SimilarityTestSet& test);

// ---------------------------------------------------------------------------
// Crosslingual document classification

struct Document {
  std::string label;
  std::vector<std::string> tokens;
};

/// "label<TAB>space-separated tokens" per line.
std::vector<Document> load_documents(const std::filesystem::path& path, bool lowercase = true);

/// Inverse document frequency over vocabulary ids computed from `docs`:
/// idf(w) = max(0, ln(N / (df(w) + 1))), so words never seen get ln(N).
std::vector<double> compute_idf(std::span<const std::vector<WordId>> docs, std::size_t vocab_size);

/// tf-idf weighted mean of the token rows. Falls back to the plain tf mean
/// when every weight is zero. Throws std::invalid_argument for an empty doc.
std::vector<double> doc_vector(std::span<const WordId> tokens, const Matrix& emb,
                               std::span<const double> idf);

/// Multiclass perceptron with weight averaging over every example visit.
class AveragedPerceptron {
 public:
  AveragedPerceptron() = default;
  AveragedPerceptron(std::size_t classes, std::size_t dim);

  /// Examples are visited in a seeded shuffled order each epoch.
  void train(std::span<const std::vector<double>> xs, std::span<const int> labels,
             std::size_t epochs, std::uint64_t seed);

  /// argmax over classes of the averaged scores; ties to the lowest class.
  int predict(std::span<const double> x) const;

  std::size_t classes() const { return classes_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> weights(int cls) const {
    return {averaged_.data() + static_cast<std::size_t>(cls) * (dim_ + 1), dim_ + 1};
  }

 private:
  std::size_t classes_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> averaged_;  // classes x (dim + 1), last column is the bias
};

struct CldcOptions {
  std::size_t n_train = 1000;
  std::size_t n_test = 5000;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
};

struct CldcResult {
  double accuracy = 0.0;
  std::size_t train_docs = 0;
  std::size_t test_docs = 0;
  std::size_t skipped_train = 0;  // no in-vocabulary token
  std::size_t skipped_test = 0;
  std::size_t unseen_label_misses = 0;
  double train_accuracy = 0.0;
};

/// Trains on the first n_train usable source documents and reports accuracy on
/// the first n_test usable target documents. idf comes from the training
/// documents only.
CldcResult cldc_run(const Matrix& emb, const Vocabulary& vocab, std::span<const Document> train,
                    std::span<const Document> test, const CldcOptions& options = {});

}  // namespace clwe

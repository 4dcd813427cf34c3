#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clwe/types.hpp"

namespace clwe {

/// The two |W| x d parameter matrices: `context` (V) encodes words as
/// context, `word` (U) encodes them as prediction targets.
struct EmbeddingMatrices {
  Matrix context;
  Matrix word;

  std::size_t vocab_size() const { return context.rows(); }
  std::size_t dim() const { return context.cols(); }

  friend bool operator==(const EmbeddingMatrices&, const EmbeddingMatrices&) = default;
};

/// V uniform in [-0.5/d, 0.5/d], U all zero. Deterministic in `seed`.
EmbeddingMatrices init_embeddings(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

/// Mean of the context rows of `context_matrix`. Throws std::invalid_argument
/// on an empty context.
void context_vector(const Matrix& context_matrix, std::span<const WordId> context,
                    std::span<double> out);
std::vector<double> context_vector(const Matrix& context_matrix, std::span<const WordId> context);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Cosine similarity; -infinity when either vector has zero norm, so that
/// such rows sort after every real score.
double cosine(std::span<const double> a, std::span<const double> b);

enum class Provenance {
  u,
  v,
  interpolate,
  concat,
  regularized_u,
  regularized_v,
  regularized_mean,
};

std::string_view to_string(Provenance p);

struct CombinedEmbedding {
  Matrix vectors;
  Provenance provenance = Provenance::u;
  double gamma = 0.0;  // meaningful for interpolate / regularized_mean only
};

/// gamma * V + (1 - gamma) * U.
CombinedEmbedding combine_interpolate(const EmbeddingMatrices& m, double gamma);
/// Row w is [V_w ; U_w].
CombinedEmbedding combine_concat(const EmbeddingMatrices& m);
CombinedEmbedding select_word(const EmbeddingMatrices& m);
CombinedEmbedding select_context(const EmbeddingMatrices& m);

/// Text embedding file: "<count> <dim>" header, then "<word> v1 ... vdim"
/// per row with six decimals. Words containing whitespace are rejected.
void save_embeddings(const Matrix& vectors, std::span<const std::string> words,
                     const std::filesystem::path& path);

struct LoadedEmbeddings {
  std::vector<std::string> words;
  Matrix vectors;
};

LoadedEmbeddings load_embeddings(const std::filesystem::path& path);

}  // namespace clwe

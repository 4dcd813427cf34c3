#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "clwe/error.hpp"
#include "clwe/model.hpp"
#include "doctest.h"

using namespace clwe;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (auto& x : m.values()) x = g(rng);
  return m;
}

EmbeddingMatrices random_pair(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  return {random_matrix(rows, cols, seed), random_matrix(rows, cols, seed + 1)};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("initialisation ranges and determinism") {
  const auto m = init_embeddings(500, 200, 42);
  CHECK(m.context.rows() == 500);
  CHECK(m.context.cols() == 200);
  double max_abs = 0.0;
  for (double x : m.context.values()) max_abs = std::max(max_abs, std::abs(x));
  CHECK(max_abs <= 0.0025);
  CHECK(max_abs > 0.0);
  for (double x : m.word.values()) CHECK(x == 0.0);
  CHECK(init_embeddings(500, 200, 42) == m);
  CHECK_FALSE(init_embeddings(500, 200, 43).context == m.context);
}

TEST_CASE("context mean") {
  Matrix v(3, 2);
  v(0, 0) = 1;
  v(1, 1) = 1;
  v(2, 0) = 3;
  v(2, 1) = -4;
  const std::vector<WordId> two{0, 1};
  CHECK(context_vector(v, two) == std::vector<double>{0.5, 0.5});
  const std::vector<WordId> one{2};
  CHECK(context_vector(v, one) == std::vector<double>{3, -4});
  CHECK_THROWS_AS(context_vector(v, std::vector<WordId>{}), std::invalid_argument);

  SUBCASE("five random rows against a running sum") {
    const auto r = random_matrix(10, 7, 5);
    const std::vector<WordId> ids{9, 2, 2, 4, 7};
    const auto h = context_vector(r, ids);
    for (std::size_t j = 0; j < 7; ++j) {
      long double s = 0;
      for (auto id : ids) s += r(static_cast<std::size_t>(id), j);
      CHECK(std::abs(h[j] - static_cast<double>(s / 5)) <= 1e-12);
    }
  }
}

TEST_CASE("cosine") {
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y{4, 5, 6};
  CHECK(cosine(x, x) == doctest::Approx(1.0));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine(x, y) == doctest::Approx(32.0 / (std::sqrt(14.0) * std::sqrt(77.0))).epsilon(1e-14));
  CHECK(cosine(x, y) == doctest::Approx(0.9746).epsilon(1e-4));
  const std::vector<double> zero{0, 0, 0};
  CHECK(cosine(zero, x) == -std::numeric_limits<double>::infinity());
  CHECK(cosine(x, zero) < -1.0);
}

TEST_CASE("interpolation") {
  const auto m = random_pair(20, 6, 7);
  CHECK(combine_interpolate(m, 1.0).vectors == m.context);
  CHECK(combine_interpolate(m, 0.0).vectors == m.word);

  EmbeddingMatrices tiny{Matrix(1, 2), Matrix(1, 2)};
  tiny.context(0, 0) = 2;
  tiny.word(0, 1) = 2;
  const auto mid = combine_interpolate(tiny, 0.5).vectors;
  CHECK(mid(0, 0) == 1.0);
  CHECK(mid(0, 1) == 1.0);

  const auto c = combine_interpolate(m, 0.3);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(std::abs(c.vectors(i, j) - (0.3 * m.context(i, j) + 0.7 * m.word(i, j))) <= 1e-12);
    }
  }
  CHECK(c.provenance == Provenance::interpolate);
  CHECK(c.gamma == 0.3);

  SUBCASE("gamma 0.5 is symmetric in V and U") {
    const EmbeddingMatrices swapped{m.word, m.context};
    CHECK(combine_interpolate(swapped, 0.5).vectors == combine_interpolate(m, 0.5).vectors);
  }
  SUBCASE("inputs are untouched") {
    const auto copy = m;
    (void)combine_interpolate(m, 0.25);
    (void)combine_concat(m);
    CHECK(copy == m);
  }
}

TEST_CASE("concatenation") {
  EmbeddingMatrices m{Matrix(1, 2), Matrix(1, 2)};
  m.context(0, 0) = 1;
  m.context(0, 1) = 2;
  m.word(0, 0) = 3;
  m.word(0, 1) = 4;
  const auto c = combine_concat(m).vectors;
  CHECK(c.cols() == 4);
  CHECK(std::vector<double>(c.row(0).begin(), c.row(0).end()) == std::vector<double>{1, 2, 3, 4});

  const auto big = init_embeddings(3, 200, 1);
  CHECK(combine_concat(big).vectors.cols() == 400);

  SUBCASE("zero padding keeps cosine") {
    auto r = random_pair(2, 5, 3);
    for (auto& x : r.word.values()) x = 0.0;
    const auto cc = combine_concat(r).vectors;
    CHECK(cosine(cc.row(0), cc.row(1)) == doctest::Approx(cosine(r.context.row(0), r.context.row(1))));
  }
}

TEST_CASE("embedding file round trip") {
  const auto m = random_matrix(4, 3, 11);
  const std::vector<std::string> words{"alpha", "beta", "gamma", "delta"};
  const auto path = temp_file("clwe_emb_roundtrip.vec");
  save_embeddings(m, words, path);
  const auto back = load_embeddings(path);
  CHECK(back.words == words);
  REQUIRE(back.vectors.rows() == 4);
  REQUIRE(back.vectors.cols() == 3);
  double worst = 0.0;
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    worst = std::max(worst, std::abs(m.values()[i] - back.vectors.values()[i]));
  }
  CHECK(worst <= 1e-6);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "4 3");
  std::filesystem::remove(path);
}

TEST_CASE("negative zero is written as zero") {
  Matrix m(1, 2);
  m(0, 0) = -1e-9;
  m(0, 1) = -0.0;
  const auto path = temp_file("clwe_emb_negzero.vec");
  save_embeddings(m, std::vector<std::string>{"w"}, path);
  std::ifstream in(path);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(row == "w 0.000000 0.000000");
  std::filesystem::remove(path);
}

TEST_CASE("embedding file errors") {
  const auto path = temp_file("clwe_emb_bad.vec");
  SUBCASE("more rows than the header says") {
    std::ofstream(path) << "3 2\na 1 2\nb 1 2\nc 1 2\nd 1 2\n";
    CHECK_THROWS_AS(load_embeddings(path), DataError);
  }
  SUBCASE("fewer rows") {
    std::ofstream(path) << "3 2\na 1 2\n";
    CHECK_THROWS_AS(load_embeddings(path), DataError);
  }
  SUBCASE("row length mismatch carries the line") {
    std::ofstream(path) << "2 2\na 1 2\nb 1 2 3\n";
    try {
      load_embeddings(path);
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("malformed header") {
    std::ofstream(path) << "two 2\na 1 2\n";
    try {
      load_embeddings(path);
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("word with a space is rejected on save") {
    CHECK_THROWS(save_embeddings(Matrix(1, 1), std::vector<std::string>{"two words"}, path));
  }
  std::filesystem::remove(path);
}

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "clwe/error.hpp"
#include "clwe/eval.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace clwe;

namespace {

Vocabulary bilingual_vocab(std::size_t n_e, std::size_t n_f) {
  std::vector<VocabEntry> entries;
  for (std::size_t i = 0; i < n_e; ++i) entries.push_back({"e" + std::to_string(i), 1, 0});
  for (std::size_t i = 0; i < n_f; ++i) entries.push_back({"f" + std::to_string(i), 0, 1});
  return Vocabulary(std::move(entries));
}

Matrix rows(std::initializer_list<std::vector<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  std::size_t i = 0;
  for (const auto& row : r) {
    for (std::size_t j = 0; j < row.size(); ++j) m(i, j) = row[j];
    ++i;
  }
  return m;
}

Matrix integer_matrix(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::uniform_int_distribution<int> v(-1, 1);
  Matrix m(n, d);
  for (auto& x : m.values()) x = v(rng);
  return m;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("nearest neighbours") {
  const std::vector<std::string> words{"q", "a", "b", "c"};
  const auto vocab = Vocabulary::from_words(words);
  const auto emb = rows({{1, 0}, {0, 1}, {1, 0.1}, {-1, 0}});

  const auto nn = nearest_neighbors(emb, vocab, "q", 10);
  REQUIRE(nn.size() == 3);
  CHECK(nn[0].word == "b");
  CHECK(nn[1].word == "a");
  CHECK(nn[2].word == "c");
  for (const auto& n : nn) CHECK(n.word != "q");
  CHECK(nearest_neighbors(emb, vocab, "q", 1).size() == 1);
  CHECK_THROWS_AS(nearest_neighbors(emb, vocab, "zzz", 3), DataError);

  SUBCASE("language filter") {
    std::vector<VocabEntry> entries{{"q", 1, 0}, {"a", 1, 0}, {"b", 1, 0}, {"c", 0, 1}};
    const Vocabulary v(std::move(entries));
    const auto only = nearest_neighbors(emb, v, "q", 5, Language::f);
    REQUIRE(only.size() == 1);
    CHECK(only[0].word == "c");
  }
  SUBCASE("positive scaling keeps the ranking") {
    auto scaled = emb;
    for (auto& x : scaled.values()) x *= 0.37;
    const auto again = nearest_neighbors(scaled, vocab, "q", 10);
    for (std::size_t i = 0; i < nn.size(); ++i) CHECK(again[i].id == nn[i].id);
  }
}

TEST_CASE("bli recall") {
  const auto vocab = bilingual_vocab(1, 5);
  // e0 queries; f0 is gold.
  SUBCASE("gold nearest") {
    const auto emb = rows({{1, 0}, {1, 0.01}, {0, 1}, {-1, 0}, {0, -1}, {-1, -1}});
    const BliTestSet t{{{"e0", "f0"}}, Language::e, Language::f};
    const std::vector<std::size_t> ks{1, 5};
    const auto r = bli_recall(emb, vocab, t, ks);
    CHECK(r.recall.at(1) == 1.0);
    CHECK(r.recall.at(5) == 1.0);
  }
  SUBCASE("gold third") {
    const auto emb = rows({{1, 0}, {0.5, 1}, {1, 0.1}, {1, 0.2}, {0, -1}, {-1, -1}});
    const BliTestSet t{{{"e0", "f0"}}, Language::e, Language::f};
    const std::vector<std::size_t> ks{1, 5};
    const auto r = bli_recall(emb, vocab, t, ks);
    CHECK(r.recall.at(1) == 0.0);
    CHECK(r.recall.at(5) == 1.0);
    const std::vector<WordId> pool{1, 2, 3, 4, 5};
    CHECK(rank_of(emb, 0, 1, pool) == 3);
  }
  SUBCASE("out-of-vocabulary pairs are excluded") {
    const auto emb = rows({{1, 0}, {1, 0.01}, {0, 1}, {-1, 0}, {0, -1}, {-1, -1}});
    const BliTestSet t{{{"e0", "f0"}, {"e0", "nope"}, {"nope", "f1"}, {"e0", "e0"}}, Language::e, Language::f};
    const std::vector<std::size_t> ks{1};
    const auto r = bli_recall(emb, vocab, t, ks);
    CHECK(r.evaluated == 1);
    CHECK(r.excluded == 3);
    const BliTestSet none{{{"x", "y"}}, Language::e, Language::f};
    CHECK_THROWS_AS(bli_recall(emb, vocab, none, ks), DataError);
  }
}

TEST_CASE("bli and neighbours agree with exhaustive oracles") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto vocab = bilingual_vocab(10, 12);
    const auto emb = integer_matrix(rng, vocab.size(), 3);
    BliTestSet t;
    std::uniform_int_distribution<int> e(0, 9);
    std::uniform_int_distribution<int> f(0, 11);
    for (int i = 0; i < 20; ++i) t.pairs.push_back({"e" + std::to_string(e(rng)), "f" + std::to_string(f(rng))});
    const std::vector<std::size_t> ks{1, 2, 5, 10};
    const auto got = bli_recall(emb, vocab, t, ks);
    const auto want = testing::brute_bli(emb, vocab, t, ks);
    CHECK(got.evaluated == want.evaluated);
    CHECK(got.recall == want.recall);
    double prev = 0.0;
    for (auto k : ks) {
      CHECK(got.recall.at(k) >= prev);
      prev = got.recall.at(k);
    }

    for (WordId q = 0; q < 5; ++q) {
      const auto nn = nearest_neighbors(emb, vocab, vocab.word(q), 8, Language::f);
      const auto oracle = testing::brute_neighbors(emb, vocab, q, 8, Language::f);
      REQUIRE(nn.size() == oracle.size());
      for (std::size_t i = 0; i < nn.size(); ++i) CHECK(nn[i].id == oracle[i]);
    }
  }
}

TEST_CASE("fractional ranks and spearman") {
  const std::vector<double> a{10, 20, 20, 30};
  CHECK(fractional_ranks(a) == std::vector<double>{1, 2.5, 2.5, 4});

  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 100};
  const std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(spearman_correlation(x, y) == doctest::Approx(1.0));
  CHECK(spearman_correlation(x, rev) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(spearman_correlation(std::vector<double>{1}, std::vector<double>{2}), DataError);
  CHECK_THROWS_AS(spearman_correlation(x, std::vector<double>{1, 1, 1, 1, 1}), DataError);

  SUBCASE("ten pairs with a tie") {
    const std::vector<double> h{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const std::vector<double> m{0.1, 0.3, 0.2, 0.5, 0.5, 0.9, 0.7, 0.6, 1.0, 0.8};
    CHECK(fractional_ranks(m) == testing::brute_ranks(m));
    CHECK(std::abs(spearman_correlation(m, h) - testing::brute_spearman(m, h)) <= 1e-12);
  }
  SUBCASE("monotone transforms leave rho unchanged") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> p(30);
    std::vector<double> q(30);
    for (std::size_t i = 0; i < 30; ++i) {
      p[i] = g(rng);
      q[i] = p[i] + g(rng);
    }
    std::vector<double> tp(30);
    for (std::size_t i = 0; i < 30; ++i) tp[i] = std::exp(3 * p[i]) + 7;
    CHECK(spearman_correlation(tp, q) == spearman_correlation(p, q));
  }
}

TEST_CASE("spearman over a similarity set") {
  const std::vector<std::string> words{"a", "b", "c", "d"};
  const auto vocab = Vocabulary::from_words(words);
  const auto emb = rows({{1, 0}, {1, 0.1}, {0, 1}, {-1, 0.2}});
  SimilarityTestSet t;
  t.items = {{"a", "b", 9.0}, {"a", "c", 5.0}, {"a", "d", 1.0}, {"a", "zz", 3.0}};
  const auto r = spearman(emb, vocab, t);
  CHECK(r.rho == doctest::Approx(1.0));
  CHECK(r.evaluated == 3);
  CHECK(r.excluded == 1);
}

TEST_CASE("test-file loaders") {
  const auto bli = write_temp("clwe_bli.tsv", "Casa\tHouse\n\ncane\tdog\n");
  const auto t = load_bli_test(bli);
  REQUIRE(t.pairs.size() == 2);
  CHECK(t.pairs[0].source == "casa");
  CHECK(t.pairs[0].gold == "house");

  const auto ws = write_temp("clwe_ws.tsv", "a\tb\t7.5\nc\td\tnotanumber\n");
  CHECK_THROWS_AS(load_similarity_test(ws), DataError);

  const auto docs = write_temp("clwe_docs.tsv", "sport\tThe match ended\nnews\tmarkets fell\n");
  const auto d = load_documents(docs);
  REQUIRE(d.size() == 2);
  CHECK(d[0].label == "sport");
  CHECK(d[0].tokens == std::vector<std::string>{"the", "match", "ended"});
  for (const auto& p : {bli, ws, docs}) std::filesystem::remove(p);
}

TEST_CASE("document vectors") {
  const auto emb = rows({{1, 2}, {3, 4}, {5, 6}, {-1, 0.5}, {0, 0}});
  const std::vector<double> idf{0.5, 1.0, 2.0, 0.25, 1.0};

  const std::vector<WordId> single{2};
  CHECK(doc_vector(single, emb, idf) == std::vector<double>{5, 6});

  const std::vector<double> flat{1, 1, 1, 1, 1};
  const std::vector<WordId> pair{0, 1};
  const auto v = doc_vector(pair, emb, flat);
  CHECK(v[0] == doctest::Approx(2.0));
  CHECK(v[1] == doctest::Approx(3.0));

  SUBCASE("five tokens against a weighted mean") {
    const std::vector<WordId> toks{0, 1, 1, 3, 2};
    double wsum = 0;
    std::vector<double> acc(2, 0.0);
    // tf: 0->1, 1->2, 3->1, 2->1
    const std::vector<std::pair<WordId, double>> tf{{0, 1}, {1, 2}, {3, 1}, {2, 1}};
    for (auto [w, c] : tf) {
      const double weight = c * idf[static_cast<std::size_t>(w)];
      wsum += weight;
      for (std::size_t j = 0; j < 2; ++j) acc[j] += weight * emb(static_cast<std::size_t>(w), j);
    }
    const auto got = doc_vector(toks, emb, idf);
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(got[j] - acc[j] / wsum) <= 1e-12);
  }
  SUBCASE("zero idf everywhere falls back to tf") {
    const std::vector<double> zero(5, 0.0);
    const auto z = doc_vector(pair, emb, zero);
    CHECK(z[0] == doctest::Approx(2.0));
  }
  CHECK_THROWS_AS(doc_vector(std::vector<WordId>{}, emb, idf), std::invalid_argument);
}

TEST_CASE("idf") {
  const std::vector<std::vector<WordId>> docs{{0, 1}, {0, 0}, {0, 2}, {3}};
  const auto idf = compute_idf(docs, 5);
  CHECK(idf[0] == 0.0);                                  // ln(4/4)
  CHECK(idf[1] == doctest::Approx(std::log(4.0 / 2)));   // df 1
  CHECK(idf[4] == doctest::Approx(std::log(4.0)));       // unseen
}

TEST_CASE("averaged perceptron") {
  SUBCASE("separable toy set") {
    const std::vector<std::vector<double>> xs{{2, 1}, {1.5, 2}, {3, 0.5}, {-1, -2}, {-2, -0.5}, {-0.5, -3}};
    const std::vector<int> ys{0, 0, 0, 1, 1, 1};
    AveragedPerceptron p(2, 2);
    p.train(xs, ys, 20, 3);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(p.predict(xs[i]) == ys[i]);
  }
  SUBCASE("single example") {
    const std::vector<std::vector<double>> xs{{0.3, -0.7}};
    const std::vector<int> ys{2};
    AveragedPerceptron p(3, 2);
    p.train(xs, ys, 1, 1);
    CHECK(p.predict(xs[0]) == 2);
  }
  SUBCASE("margin data generalises") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    auto sample = [&](int& label) {
      std::vector<double> x(5);
      for (auto& v : x) v = g(rng);
      double s = x[0] + x[1] - x[2];
      while (std::abs(s) < 0.5) {
        x[0] += (s >= 0 ? 0.3 : -0.3);
        s = x[0] + x[1] - x[2];
      }
      label = s > 0 ? 1 : 0;
      return x;
    };
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 200; ++i) {
      int y;
      xs.push_back(sample(y));
      ys.push_back(y);
    }
    AveragedPerceptron p(2, 5);
    p.train(xs, ys, 10, 7);
    int correct = 0;
    for (int i = 0; i < 200; ++i) {
      int y;
      const auto x = sample(y);
      correct += p.predict(x) == y;
    }
    CHECK(correct >= 190);
  }
  SUBCASE("same seed, same weights") {
    const std::vector<std::vector<double>> xs{{1, 0}, {0, 1}, {1, 1}, {-1, 0}};
    const std::vector<int> ys{0, 1, 1, 0};
    AveragedPerceptron a(2, 2);
    AveragedPerceptron b(2, 2);
    a.train(xs, ys, 5, 9);
    b.train(xs, ys, 5, 9);
    for (int c = 0; c < 2; ++c) {
      const auto wa = a.weights(c);
      const auto wb = b.weights(c);
      CHECK(std::vector<double>(wa.begin(), wa.end()) == std::vector<double>(wb.begin(), wb.end()));
    }
  }
}

TEST_CASE("cldc on identical source and target equals training accuracy") {
  std::mt19937_64 rng(4);
  const auto vocab = bilingual_vocab(30, 0);
  Matrix emb(30, 4);
  std::normal_distribution<double> g;
  for (auto& x : emb.values()) x = g(rng);
  std::vector<Document> docs;
  std::uniform_int_distribution<int> w(0, 29);
  for (int i = 0; i < 60; ++i) {
    Document d;
    d.label = (i % 3 == 0) ? "x" : (i % 3 == 1 ? "y" : "z");
    for (int t = 0; t < 6; ++t) d.tokens.push_back("e" + std::to_string(w(rng)));
    docs.push_back(d);
  }
  const auto r = cldc_run(emb, vocab, docs, docs);
  CHECK(r.accuracy == r.train_accuracy);
  CHECK(r.train_docs == 60);
  CHECK(r.test_docs == 60);
}
